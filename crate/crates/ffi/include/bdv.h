#ifndef BDV_H
#define BDV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BdvStatus {
  /**
   * Success; for validation, every rule held.
   */
  BDV_STATUS_OK = 0,
  /**
   * Validation found at least one counterexample and no rule error.
   */
  BDV_STATUS_KO = 1,
  /**
   * At least one rule met an undefined term.
   */
  BDV_STATUS_RULE_ERROR = 2,
  /**
   * Schema, data or rules could not be loaded, parsed or typechecked.
   */
  BDV_STATUS_LOAD_ERROR = 3,
  /**
   * The two evaluators disagreed in redundant mode.
   */
  BDV_STATUS_DIVERGENCE = 4,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  BDV_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The engine panicked; the handle passed in should be discarded.
   */
  BDV_STATUS_PANIC = 6,
} BdvStatus;

/**
 * The outcome of one validation campaign.
 */
typedef struct BdvReport BdvReport;

/**
 * Rules parsed and typechecked against one universe.
 */
typedef struct BdvRuleSet BdvRuleSet;

/**
 * A loaded schema and dataset.
 */
typedef struct BdvUniverse BdvUniverse;

typedef struct BdvTotals {
  uint64_t ok;
  uint64_t ko;
  uint64_t error;
  uint64_t counterexamples;
} BdvTotals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a
 * successful call. The pointer stays valid until the next call into this
 * library on the same thread.
 */
const char *bdv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bdv_version(void);

/**
 * Loads the schema at `schema_path`; data files it names are read relative
 * to its directory.
 *
 * # Safety
 * `schema_path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BdvStatus bdv_universe_load(const char *schema_path, struct BdvUniverse **out);

/**
 * Builds a universe from schema text whose constants are all given inline.
 *
 * # Safety
 * `schema_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BdvStatus bdv_universe_from_text(const char *schema_text, struct BdvUniverse **out);

/**
 * Number of data items (elements of constants) in the universe, or 0 for
 * a null handle.
 *
 * # Safety
 * `u` must be null or a handle from this library.
 */
uint64_t bdv_universe_items(const struct BdvUniverse *u);

/**
 * # Safety
 * `u` must be null or a handle from this library not yet freed.
 */
void bdv_universe_free(struct BdvUniverse *u);

/**
 * Parses `rules_text` and typechecks every rule against `u`. `file_name`
 * appears in diagnostics and may be null.
 *
 * # Safety
 * Strings must be NUL-terminated, `u` a live handle and `out` a valid
 * pointer.
 */
enum BdvStatus bdv_rules_parse(const char *rules_text,
                               const char *file_name,
                               const struct BdvUniverse *u,
                               struct BdvRuleSet **out);

/**
 * Number of rules in the set, or 0 for a null handle.
 *
 * # Safety
 * `rules` must be null or a handle from this library.
 */
uint64_t bdv_rules_count(const struct BdvRuleSet *rules);

/**
 * # Safety
 * `rules` must be null or a handle from this library not yet freed.
 */
void bdv_rules_free(struct BdvRuleSet *rules);

/**
 * Runs every rule on `u`, which must be the universe the rules were
 * typechecked against. `jobs` = 0 uses every processor. On success the
 * status reflects the verdict (OK, KO or RULE_ERROR) and `*out` holds the
 * report.
 *
 * # Safety
 * `rules` and `u` must be live handles and `out` a valid pointer.
 */
enum BdvStatus bdv_validate(const struct BdvRuleSet *rules,
                            const struct BdvUniverse *u,
                            uint32_t jobs,
                            bool redundant,
                            struct BdvReport **out);

/**
 * Copies the report totals into `*totals`.
 *
 * # Safety
 * `report` must be a live handle and `totals` a valid pointer.
 */
enum BdvStatus bdv_report_totals(const struct BdvReport *report, struct BdvTotals *totals);

/**
 * The report as JSON. The string belongs to the caller and must be released
 * with [`bdv_string_free`]; null on failure.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *bdv_report_json(const struct BdvReport *report);

/**
 * # Safety
 * `report` must be null or a handle from this library not yet freed.
 */
void bdv_report_free(struct BdvReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void bdv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BDV_H */
