use std::fmt::Write as _;

use crate::harness::HarnessReport;
use crate::rules::{Report, Status};

fn show_assignment(a: &crate::rules::Assignment) -> String {
    if a.is_empty() {
        return "(no bindings)".into();
    }
    a.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ")
}

pub fn report_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "bdv {}: {} carriers, {} constants, {} data items",
        r.version,
        r.universe.carriers.len(),
        r.universe.constants.len(),
        r.universe.total_items
    );
    let width = r.rules.iter().map(|x| x.name.len()).max().unwrap_or(0);
    for rule in &r.rules {
        let status = match rule.status {
            Status::Ok => "OK",
            Status::Ko => "KO",
            Status::Error => "ERROR",
        };
        let _ = writeln!(
            out,
            "{status:<5} {:<width$}  selected {}  counterexamples {}  {:.3} ms",
            rule.name,
            rule.selected,
            rule.counterexamples.len(),
            rule.timing_ms
        );
        for cx in &rule.counterexamples {
            let _ = writeln!(out, "      {}: {}  [{}]", show_assignment(&cx.assignment), cx.message, cx.span);
        }
        if let Some(e) = &rule.error {
            let _ = writeln!(
                out,
                "      {} at {} with {}: {}",
                e.kind,
                e.span,
                show_assignment(&e.assignment),
                e.detail
            );
        }
    }
    if !r.skipped.is_empty() {
        let _ = writeln!(out, "skipped after first KO: {}", r.skipped.join(", "));
    }
    let t = &r.totals;
    let _ = writeln!(
        out,
        "totals: {} OK, {} KO, {} ERROR, {} counterexamples in {:.3} ms",
        t.ok, t.ko, t.error, t.counterexamples, r.wall_ms
    );
    out
}

pub fn report_csv(r: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["name", "status", "selected", "counterexamples", "timing_ms"]);
    for rule in &r.rules {
        let status = match rule.status {
            Status::Ok => "OK",
            Status::Ko => "KO",
            Status::Error => "ERROR",
        };
        let _ = w.write_record([
            rule.name.clone(),
            status.to_string(),
            rule.selected.to_string(),
            rule.counterexamples.len().to_string(),
            format!("{:.3}", rule.timing_ms),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv writer")).expect("utf-8 csv")
}

pub fn harness_text(h: &HarnessReport) -> String {
    let mut out = String::new();
    for s in &h.scenarios {
        let verdict = if s.passed { "pass" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{verdict} {} (rule {}): expected {}, got {}",
            s.scenario, s.rule, s.expected, s.actual
        );
        for d in &s.details {
            let _ = writeln!(out, "     {d}");
        }
    }
    for gap in &h.coverage {
        let _ = writeln!(out, "coverage: {gap}");
    }
    let failed = h.scenarios.iter().filter(|s| !s.passed).count();
    let _ = writeln!(
        out,
        "{} scenarios, {} passed, {} failed, {} coverage gaps",
        h.scenarios.len(),
        h.scenarios.len() - failed,
        failed,
        h.coverage.len()
    );
    out
}

pub fn harness_csv(h: &HarnessReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["scenario", "rule", "passed", "expected", "actual"]);
    for s in &h.scenarios {
        let _ = w.write_record([&s.scenario, &s.rule, &s.passed.to_string(), &s.expected, &s.actual]);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv writer")).expect("utf-8 csv")
}
