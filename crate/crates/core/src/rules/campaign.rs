use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::Universe;
use crate::lang::TypedRule;

use super::report::{Report, RuleResult, Status, Totals};
use super::run::{run_redundant, run_rule, Divergence};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    /// Worker threads; 0 means one per available processor.
    pub jobs: usize,
    pub redundant: bool,
    /// Stop starting new rules once one is KO.
    pub fail_fast: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            jobs: 0,
            redundant: false,
            fail_fast: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("rule `{0}` is defined more than once")]
    DuplicateRule(String),
    #[error(transparent)]
    Divergence(#[from] Divergence),
    #[error("cannot start worker threads: {0}")]
    Pool(String),
}

pub fn run_campaign(rules: &[TypedRule], u: &Universe, config: &CampaignConfig) -> Result<Report, CampaignError> {
    let start = Instant::now();
    let mut ordered: Vec<&TypedRule> = rules.iter().collect();
    ordered.sort_by(|a, b| a.name.cmp(&b.name));
    if let Some(w) = ordered.windows(2).find(|w| w[0].name == w[1].name) {
        return Err(CampaignError::DuplicateRule(w[0].name.clone()));
    }

    let stop = AtomicBool::new(false);
    let divergence: Mutex<Option<Divergence>> = Mutex::new(None);
    let run_one = |rule: &TypedRule| -> Option<RuleResult> {
        if stop.load(Ordering::SeqCst) {
            return None;
        }
        let result = if config.redundant {
            match run_redundant(rule, u) {
                Ok(r) => r,
                Err(d) => {
                    stop.store(true, Ordering::SeqCst);
                    divergence.lock().expect("divergence lock").get_or_insert(d);
                    return None;
                }
            }
        } else {
            run_rule(rule, u)
        };
        if config.fail_fast && result.status == Status::Ko {
            stop.store(true, Ordering::SeqCst);
        }
        Some(result)
    };

    let outcomes: Vec<Option<RuleResult>> = if config.jobs == 1 {
        ordered.iter().map(|r| run_one(r)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| CampaignError::Pool(e.to_string()))?;
        pool.install(|| ordered.par_iter().map(|r| run_one(r)).collect())
    };

    if let Some(d) = divergence.into_inner().expect("divergence lock") {
        return Err(CampaignError::Divergence(d));
    }
    let mut results = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for (rule, outcome) in ordered.iter().zip(outcomes) {
        match outcome {
            Some(r) => results.push(r),
            None => skipped.push(rule.name.clone()),
        }
    }
    let totals = Totals::of(&results);
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        universe: u.digest(),
        rules: results,
        totals,
        wall_ms: (start.elapsed().as_secs_f64() * 1e6).round() / 1e3,
        skipped,
    })
}
