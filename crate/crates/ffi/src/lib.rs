//! C ABI for bdv.
//!
//! Every function returns a [`BdvStatus`]; on anything other than
//! `BDV_STATUS_OK`, `BDV_STATUS_KO` or `BDV_STATUS_RULE_ERROR` a description
//! is available from [`bdv_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use bdv::ingest::{load_dataset, load_schema, DataFiles, Universe};
use bdv::lang::{parse_rule_file, typecheck_rule, Diagnostics, TypedRule};
use bdv::rules::{run_campaign, CampaignConfig, CampaignError, Report};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdvStatus {
    /// Success; for validation, every rule held.
    Ok = 0,
    /// Validation found at least one counterexample and no rule error.
    Ko = 1,
    /// At least one rule met an undefined term.
    RuleError = 2,
    /// Schema, data or rules could not be loaded, parsed or typechecked.
    LoadError = 3,
    /// The two evaluators disagreed in redundant mode.
    Divergence = 4,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 5,
    /// The engine panicked; the handle passed in should be discarded.
    Panic = 6,
}

/// A loaded schema and dataset.
pub struct BdvUniverse(Universe);

/// Rules parsed and typechecked against one universe.
pub struct BdvRuleSet(Vec<TypedRule>);

/// The outcome of one validation campaign.
pub struct BdvReport(Report);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BdvTotals {
    pub ok: u64,
    pub ko: u64,
    pub error: u64,
    pub counterexamples: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("interior nul removed"));
}

struct Failure(BdvStatus, String);

impl From<Diagnostics> for Failure {
    fn from(d: Diagnostics) -> Self {
        Failure(BdvStatus::LoadError, d.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<BdvStatus, Failure>) -> BdvStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            BdvStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(BdvStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BdvStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(BdvStatus::InvalidArgument, format!("{what} is null")))
}

fn out_ptr<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(BdvStatus::InvalidArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn load(schema_name: &str, schema_text: &str, files: &DataFiles) -> Result<Universe, Failure> {
    let schema = load_schema(schema_name, schema_text)?;
    load_dataset(&schema, files).map_err(|e| Failure(BdvStatus::LoadError, e.to_string()))
}

/// Message describing the last failure on this thread; empty after a
/// successful call. The pointer stays valid until the next call into this
/// library on the same thread.
#[no_mangle]
pub extern "C" fn bdv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bdv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads the schema at `schema_path`; data files it names are read relative
/// to its directory.
///
/// # Safety
/// `schema_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdv_universe_load(schema_path: *const c_char, out: *mut *mut BdvUniverse) -> BdvStatus {
    guard(|| {
        out_ptr(out)?;
        *out = ptr::null_mut();
        let path = PathBuf::from(text(schema_path, "schema path")?);
        let schema_text = std::fs::read_to_string(&path)
            .map_err(|e| Failure(BdvStatus::LoadError, format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let u = load(&path.display().to_string(), &schema_text, &DataFiles::from_dir(dir))?;
        *out = Box::into_raw(Box::new(BdvUniverse(u)));
        Ok(BdvStatus::Ok)
    })
}

/// Builds a universe from schema text whose constants are all given inline.
///
/// # Safety
/// `schema_text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdv_universe_from_text(schema_text: *const c_char, out: *mut *mut BdvUniverse) -> BdvStatus {
    guard(|| {
        out_ptr(out)?;
        *out = ptr::null_mut();
        let u = load("<schema>", text(schema_text, "schema text")?, &DataFiles::Memory(BTreeMap::new()))?;
        *out = Box::into_raw(Box::new(BdvUniverse(u)));
        Ok(BdvStatus::Ok)
    })
}

/// Number of data items (elements of constants) in the universe, or 0 for
/// a null handle.
///
/// # Safety
/// `u` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn bdv_universe_items(u: *const BdvUniverse) -> u64 {
    u.as_ref().map_or(0, |u| u.0.digest().total_items as u64)
}

/// # Safety
/// `u` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdv_universe_free(u: *mut BdvUniverse) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Parses `rules_text` and typechecks every rule against `u`. `file_name`
/// appears in diagnostics and may be null.
///
/// # Safety
/// Strings must be NUL-terminated, `u` a live handle and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn bdv_rules_parse(
    rules_text: *const c_char,
    file_name: *const c_char,
    u: *const BdvUniverse,
    out: *mut *mut BdvRuleSet,
) -> BdvStatus {
    guard(|| {
        out_ptr(out)?;
        *out = ptr::null_mut();
        let src = text(rules_text, "rules text")?;
        let name = if file_name.is_null() { "<rules>" } else { text(file_name, "file name")? };
        let u = handle(u, "universe")?;
        let decls = u.0.declarations();
        let mut typed = Vec::new();
        let mut diags = Vec::new();
        for r in parse_rule_file(name, src)? {
            match typecheck_rule(r, &decls) {
                Ok(t) => typed.push(t),
                Err(d) => diags.extend(d.0),
            }
        }
        if !diags.is_empty() {
            return Err(Diagnostics(diags).into());
        }
        *out = Box::into_raw(Box::new(BdvRuleSet(typed)));
        Ok(BdvStatus::Ok)
    })
}

/// Number of rules in the set, or 0 for a null handle.
///
/// # Safety
/// `rules` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn bdv_rules_count(rules: *const BdvRuleSet) -> u64 {
    rules.as_ref().map_or(0, |r| r.0.len() as u64)
}

/// # Safety
/// `rules` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdv_rules_free(rules: *mut BdvRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Runs every rule on `u`, which must be the universe the rules were
/// typechecked against. `jobs` = 0 uses every processor. On success the
/// status reflects the verdict (OK, KO or RULE_ERROR) and `*out` holds the
/// report.
///
/// # Safety
/// `rules` and `u` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdv_validate(
    rules: *const BdvRuleSet,
    u: *const BdvUniverse,
    jobs: u32,
    redundant: bool,
    out: *mut *mut BdvReport,
) -> BdvStatus {
    guard(|| {
        out_ptr(out)?;
        *out = ptr::null_mut();
        let rules = handle(rules, "rule set")?;
        let u = handle(u, "universe")?;
        let config = CampaignConfig {
            jobs: jobs as usize,
            redundant,
            fail_fast: false,
        };
        let report = run_campaign(&rules.0, &u.0, &config).map_err(|e| match e {
            CampaignError::Divergence(d) => Failure(BdvStatus::Divergence, d.to_string()),
            other => Failure(BdvStatus::LoadError, other.to_string()),
        })?;
        let status = match report.exit_code() {
            0 => BdvStatus::Ok,
            1 => BdvStatus::Ko,
            _ => BdvStatus::RuleError,
        };
        *out = Box::into_raw(Box::new(BdvReport(report)));
        Ok(status)
    })
}

/// Copies the report totals into `*totals`.
///
/// # Safety
/// `report` must be a live handle and `totals` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bdv_report_totals(report: *const BdvReport, totals: *mut BdvTotals) -> BdvStatus {
    guard(|| {
        let r = handle(report, "report")?;
        if totals.is_null() {
            return Err(Failure(BdvStatus::InvalidArgument, "totals pointer is null".into()));
        }
        let t = &r.0.totals;
        *totals = BdvTotals {
            ok: t.ok as u64,
            ko: t.ko as u64,
            error: t.error as u64,
            counterexamples: t.counterexamples as u64,
        };
        Ok(BdvStatus::Ok)
    })
}

/// The report as JSON. The string belongs to the caller and must be released
/// with [`bdv_string_free`]; null on failure.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bdv_report_json(report: *const BdvReport) -> *mut c_char {
    let mut json = ptr::null_mut();
    guard(|| {
        let r = handle(report, "report")?;
        json = CString::new(r.0.to_json()).expect("JSON has no NUL").into_raw();
        Ok(BdvStatus::Ok)
    });
    json
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdv_report_free(report: *mut BdvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bdv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
