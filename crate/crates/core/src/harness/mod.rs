//! Rule-testing environment: scenarios pair a small inline fixture with the
//! verdict a rule must reach on it.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{load_dataset, DataFiles};
use crate::lang::{typecheck_rule, Rule};
use crate::rules::{run_rule, RuleResult, Status};

mod scenario;

pub use scenario::{parse_scenario_file, Expectation, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub scenario: String,
    pub rule: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    /// Why the scenario failed; empty when it passed.
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageGap {
    pub rule: String,
    pub missing_ok: bool,
    pub missing_ko: bool,
}

impl std::fmt::Display for CoverageGap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let missing = match (self.missing_ok, self.missing_ko) {
            (true, true) => "an OK and a KO scenario",
            (true, false) => "an OK scenario",
            _ => "a KO scenario",
        };
        write!(f, "rule `{}` lacks {missing}", self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessReport {
    pub scenarios: Vec<ScenarioOutcome>,
    pub coverage: Vec<CoverageGap>,
}

impl HarnessReport {
    pub fn passed(&self) -> bool {
        self.scenarios.iter().all(|s| s.passed) && self.coverage.is_empty()
    }
}

fn file_name(path: &str) -> &str {
    Path::new(path).file_name().and_then(|n| n.to_str()).unwrap_or(path)
}

fn find_rule<'r>(s: &Scenario, rules: &'r [Rule]) -> Result<&'r Rule, String> {
    let mut candidates = rules.iter().filter(|r| r.name == s.rule);
    if let Some(file) = &s.rule_file {
        let wanted = file_name(file);
        return candidates
            .find(|r| file_name(&r.span.file) == wanted)
            .ok_or_else(|| format!("no rule `{}` in `{file}`", s.rule));
    }
    candidates.next().ok_or_else(|| format!("unknown rule `{}`", s.rule))
}

fn describe(r: &RuleResult) -> String {
    match (&r.status, &r.error) {
        (Status::Ok, _) => "OK".into(),
        (Status::Ko, _) => format!("KO {}", r.counterexamples.len()),
        (Status::Error, Some(e)) => format!("ERROR {}", e.kind),
        (Status::Error, None) => "ERROR".into(),
    }
}

/// Runs one scenario through the ordinary rule engine.
pub fn run_scenario(s: &Scenario, rules: &[Rule]) -> ScenarioOutcome {
    let mut out = ScenarioOutcome {
        scenario: s.name.clone(),
        rule: s.rule.clone(),
        passed: false,
        expected: s.expect.describe(),
        actual: String::new(),
        details: Vec::new(),
    };
    let rule = match find_rule(s, rules) {
        Ok(r) => r,
        Err(msg) => {
            out.actual = "not run".into();
            out.details.push(msg);
            return out;
        }
    };
    let universe = match load_dataset(&s.fixture, &DataFiles::Memory(BTreeMap::new())) {
        Ok(u) => u,
        Err(e) => {
            out.actual = "not run".into();
            out.details.extend(e.0.iter().map(|e| format!("fixture: {e}")));
            return out;
        }
    };
    let typed = match typecheck_rule(rule.clone(), &universe.declarations()) {
        Ok(t) => t,
        Err(d) => {
            out.actual = "not run".into();
            out.details.extend(d.0.iter().map(|d| format!("rule does not typecheck on this fixture: {d}")));
            return out;
        }
    };
    let result = run_rule(&typed, &universe);
    out.actual = describe(&result);
    match &s.expect {
        Expectation::Ok => {
            if result.status != Status::Ok {
                out.details.push(format!("expected OK, got {}", out.actual));
            }
        }
        Expectation::Error(kind) => match &result.error {
            Some(e) if e.kind == *kind => {}
            _ => out.details.push(format!("expected ERROR {kind}, got {}", out.actual)),
        },
        Expectation::Ko { count, at } => {
            if result.status != Status::Ko || result.counterexamples.len() != *count {
                out.details.push(format!("expected KO {count}, got {}", out.actual));
            }
            let mut used = vec![false; result.counterexamples.len()];
            for tuple in at {
                let hit = result.counterexamples.iter().enumerate().position(|(i, cx)| {
                    !used[i] && tuple.iter().all(|(var, text)| cx.assignment.get(var) == Some(text))
                });
                match hit {
                    Some(i) => used[i] = true,
                    None => {
                        let want: Vec<String> = tuple.iter().map(|(v, t)| format!("{v} = {t}")).collect();
                        out.details.push(format!("no counterexample with {}", want.join(", ")));
                    }
                }
            }
            if !out.details.is_empty() {
                for cx in &result.counterexamples {
                    let got: Vec<String> = cx.assignment.iter().map(|(v, t)| format!("{v} = {t}")).collect();
                    out.details.push(format!("actual counterexample: {}", got.join(", ")));
                }
            }
        }
    }
    out.passed = out.details.is_empty();
    out
}

/// Runs every scenario independently; results follow the input order.
pub fn run_scenarios(scenarios: &[Scenario], rules: &[Rule]) -> HarnessReport {
    let outcomes = scenarios.par_iter().map(|s| run_scenario(s, rules)).collect();
    HarnessReport {
        scenarios: outcomes,
        coverage: coverage_check(rules, scenarios),
    }
}

/// Rules lacking an OK scenario or a KO scenario, sorted by name.
pub fn coverage_check(rules: &[Rule], scenarios: &[Scenario]) -> Vec<CoverageGap> {
    let mut seen: BTreeMap<&str, (bool, bool)> = rules.iter().map(|r| (r.name.as_str(), (false, false))).collect();
    for s in scenarios {
        if let Some(entry) = seen.get_mut(s.rule.as_str()) {
            match s.expect {
                Expectation::Ok => entry.0 = true,
                Expectation::Ko { .. } => entry.1 = true,
                Expectation::Error(_) => {}
            }
        }
    }
    seen.into_iter()
        .filter(|(_, (ok, ko))| !(*ok && *ko))
        .map(|(rule, (ok, ko))| CoverageGap {
            rule: rule.to_string(),
            missing_ok: !ok,
            missing_ko: !ko,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_rule_file;

    const RULES: &str = r#"
        RULE linked_territory
        WHERE sig : dom(territory)
        VERIFY sig : dom(linked) & linked(sig) = territory(sig)
        MESSAGE "signal ${sig} is not linked"
        END"#;

    const FIXTURE: &str = r#"
        SETS t_signal = {s1, s2, s3}; t_interlocking = {ik1}
        CONSTANTS
          territory : t_signal +-> t_interlocking = {s1 |-> ik1, s2 |-> ik1};
          linked : t_signal +-> t_interlocking = {s1 |-> ik1}"#;

    fn scenarios(expect: &[&str]) -> Vec<Scenario> {
        let text: String = expect
            .iter()
            .enumerate()
            .map(|(i, e)| format!("SCENARIO sc{i} RULE linked_territory IN \"signals.bdr\" {FIXTURE} EXPECT {e} END\n"))
            .collect();
        parse_scenario_file("t.bdt", &text).unwrap()
    }

    #[test]
    fn seeded_fault_passes_and_wrong_count_fails() {
        let rules = parse_rule_file("rules/signals.bdr", RULES).unwrap();
        let sc = scenarios(&[r#"KO 1 AT (sig = "s2")"#, "KO 2", "OK", r#"ERROR "division-by-zero""#]);
        let report = run_scenarios(&sc, &rules);
        let passed: Vec<bool> = report.scenarios.iter().map(|s| s.passed).collect();
        assert_eq!(passed, [true, false, false, false]);
        assert_eq!(report.scenarios[1].details[0], "expected KO 2, got KO 1");
        assert!(report.coverage.is_empty());
        assert!(!report.passed());
    }

    #[test]
    fn unknown_rule_is_a_failure() {
        let rules = parse_rule_file("other.bdr", RULES).unwrap();
        let report = run_scenarios(&scenarios(&["OK"]), &rules);
        assert!(!report.scenarios[0].passed);
        assert!(report.scenarios[0].details[0].contains("no rule `linked_territory` in `signals.bdr`"));
    }

    #[test]
    fn coverage() {
        let rules = parse_rule_file("signals.bdr", &format!("{RULES}\nRULE r2 VERIFY 1 = 1 MESSAGE \"\" END")).unwrap();
        let gaps = coverage_check(&rules, &scenarios(&["OK", "KO 1"]));
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].to_string(), "rule `r2` lacks an OK and a KO scenario");
        let gaps = coverage_check(&rules[..1], &scenarios(&["OK"]));
        assert_eq!(
            gaps,
            [CoverageGap {
                rule: "linked_territory".into(),
                missing_ok: false,
                missing_ko: true
            }]
        );
        assert!(coverage_check(&rules[..1], &scenarios(&["OK", "KO 1"])).is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_scenario_file("", "SCENARIO a RULE r EXPECT MAYBE END").is_err());
        assert!(parse_scenario_file("", r#"SCENARIO a RULE r EXPECT ERROR "oops" END"#).is_err());
        let err = parse_scenario_file("", r#"SCENARIO a RULE r CONSTANTS n : INTEGER FROM "x.csv" COLS (v) EXPECT OK END"#)
            .unwrap_err();
        assert!(err.to_string().contains("inline"), "{err}");
        assert_eq!(parse_scenario_file("", "").unwrap(), Vec::new());
    }
}
