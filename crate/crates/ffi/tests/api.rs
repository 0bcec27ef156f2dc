use std::ffi::{CStr, CString};
use std::ptr;

use bdv_ffi::*;

const SCHEMA: &str = r#"
SETS t_signal = {s1, s2, s3}; t_interlocking = {ik1}
CONSTANTS
  territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1};
  linked : t_signal +-> t_interlocking = {s1 |-> ik1}"#;

const RULES: &str = r#"
RULE linked_territory
WHERE sig : dom(territory)
VERIFY sig : dom(linked) & linked(sig) = territory(sig)
MESSAGE "signal ${sig} is not linked"
END"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bdv_last_error()) }.to_str().unwrap().to_string()
}

fn universe(schema: &str) -> *mut BdvUniverse {
    let mut u = ptr::null_mut();
    let status = unsafe { bdv_universe_from_text(c(schema).as_ptr(), &mut u) };
    assert_eq!(status, BdvStatus::Ok, "{}", last_error());
    u
}

#[test]
fn validate_reports_the_unlinked_signal() {
    unsafe {
        let u = universe(SCHEMA);
        assert_eq!(bdv_universe_items(u), 3);
        let mut rules = ptr::null_mut();
        let name = c("signals.bdr");
        assert_eq!(bdv_rules_parse(c(RULES).as_ptr(), name.as_ptr(), u, &mut rules), BdvStatus::Ok);
        assert_eq!(bdv_rules_count(rules), 1);

        let mut report = ptr::null_mut();
        assert_eq!(bdv_validate(rules, u, 2, true, &mut report), BdvStatus::Ko);
        let mut totals = BdvTotals::default();
        assert_eq!(bdv_report_totals(report, &mut totals), BdvStatus::Ok);
        assert_eq!(
            totals,
            BdvTotals {
                ok: 0,
                ko: 1,
                error: 0,
                counterexamples: 1
            }
        );
        let json = bdv_report_json(report);
        let text = CStr::from_ptr(json).to_str().unwrap();
        assert!(text.contains("\"sig\": \"s2\""), "{text}");
        bdv_string_free(json);

        bdv_report_free(report);
        bdv_rules_free(rules);
        bdv_universe_free(u);
    }
}

#[test]
fn errors_are_reported_through_status_and_message() {
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(bdv_universe_from_text(ptr::null(), &mut u), BdvStatus::InvalidArgument);
        assert!(u.is_null());
        assert_eq!(last_error(), "schema text is null");

        assert_eq!(bdv_universe_from_text(c("SETS t = {a").as_ptr(), &mut u), BdvStatus::LoadError);
        assert!(!last_error().is_empty());

        let u = universe(SCHEMA);
        let mut rules = ptr::null_mut();
        let bad = c("RULE r VERIFY nowhere = 1 MESSAGE \"\" END");
        assert_eq!(bdv_rules_parse(bad.as_ptr(), ptr::null(), u, &mut rules), BdvStatus::LoadError);
        assert!(last_error().contains("nowhere"), "{}", last_error());
        assert!(rules.is_null());

        let undefined = c("RULE r WHERE sig : dom(territory) VERIFY linked(sig) = territory(sig) MESSAGE \"\" END");
        assert_eq!(bdv_rules_parse(undefined.as_ptr(), ptr::null(), u, &mut rules), BdvStatus::Ok);
        assert_eq!(last_error(), "");
        let mut report = ptr::null_mut();
        assert_eq!(bdv_validate(rules, u, 1, false, &mut report), BdvStatus::RuleError);
        assert!(!report.is_null());
        assert_eq!(bdv_validate(rules, u, 1, false, ptr::null_mut()), BdvStatus::InvalidArgument);
        assert!(bdv_report_json(ptr::null()).is_null());

        bdv_report_free(report);
        bdv_rules_free(rules);
        bdv_universe_free(u);
        bdv_universe_free(ptr::null_mut());
    }
}

#[test]
fn loads_schema_and_data_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("schema.bds"),
        r#"SETS t COLLECT CONSTANTS ts : POW(t) FROM "t.csv" COLS (id)"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("t.csv"), "id\na\nb\n").unwrap();
    let path = c(dir.path().join("schema.bds").to_str().unwrap());
    unsafe {
        let mut u = ptr::null_mut();
        assert_eq!(bdv_universe_load(path.as_ptr(), &mut u), BdvStatus::Ok, "{}", last_error());
        assert_eq!(bdv_universe_items(u), 2);
        bdv_universe_free(u);
        let missing = c(dir.path().join("nope.bds").to_str().unwrap());
        assert_eq!(bdv_universe_load(missing.as_ptr(), &mut u), BdvStatus::LoadError);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(bdv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_exported_functions() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bdv.h")).unwrap();
    for f in [
        "bdv_last_error",
        "bdv_universe_load",
        "bdv_universe_from_text",
        "bdv_rules_parse",
        "bdv_validate",
        "bdv_report_json",
        "bdv_string_free",
        "BDV_STATUS_DIVERGENCE = 4",
    ] {
        assert!(header.contains(f), "{f} missing from bdv.h");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-"])
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .stdin(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(b"#include \"bdv.h\"\nint main(void) { return 0; }\n")?;
            child.wait()
        })
    else {
        return;
    };
    assert!(status.success(), "bdv.h does not compile as C");
}
