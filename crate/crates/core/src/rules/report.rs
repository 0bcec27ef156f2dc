use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::eval::WdKind;
use crate::ingest::UniverseDigest;
use crate::lang::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "ERROR")]
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "OK",
            Status::Ko => "KO",
            Status::Error => "ERROR",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Variable name to canonical value text, in WHERE declaration order.
pub type Assignment = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub assignment: Assignment,
    pub message: String,
    /// The VERIFY conjunct found FALSE.
    pub span: SourceSpan,
}

/// Why a rule ended in ERROR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleError {
    pub kind: WdKind,
    pub detail: String,
    pub span: SourceSpan,
    /// Bindings in scope when the undefined term was met.
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub name: String,
    pub status: Status,
    /// Binding tuples that passed every WHERE filter.
    pub selected: u64,
    pub counterexamples: Vec<Counterexample>,
    pub timing_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RuleError>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub ok: usize,
    pub ko: usize,
    pub error: usize,
    pub counterexamples: usize,
}

impl Totals {
    pub fn of(results: &[RuleResult]) -> Totals {
        let mut t = Totals::default();
        for r in results {
            match r.status {
                Status::Ok => t.ok += 1,
                Status::Ko => t.ko += 1,
                Status::Error => t.error += 1,
            }
            t.counterexamples += r.counterexamples.len();
        }
        t
    }
}

/// Outcome of a validation campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub universe: UniverseDigest,
    /// Ordered by rule name.
    pub rules: Vec<RuleResult>,
    pub totals: Totals,
    pub wall_ms: f64,
    /// Rules never started because of `fail_fast`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_KO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

impl Report {
    /// 0 when every rule is OK, 1 when some rule is KO, 2 when some rule is
    /// ERROR (whatever the others are).
    pub fn exit_code(&self) -> i32 {
        if self.totals.error > 0 {
            EXIT_ERROR
        } else if self.totals.ko > 0 {
            EXIT_KO
        } else {
            EXIT_OK
        }
    }

    /// The report with every timing field zeroed, for comparisons.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        r.wall_ms = 0.0;
        for rule in &mut r.rules {
            rule.timing_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }
}
