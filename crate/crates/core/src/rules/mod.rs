//! Rule execution, counterexample collection and campaign reports.

mod campaign;
mod report;
mod run;

pub use campaign::{run_campaign, CampaignConfig, CampaignError};
pub use report::{
    Assignment, Counterexample, Report, RuleError, RuleResult, Status, Totals, EXIT_DIVERGENCE, EXIT_ERROR, EXIT_KO,
    EXIT_OK, EXIT_USAGE,
};
pub use run::{
    render_message, run_redundant, run_redundant_with, run_rule, run_rule_naive, run_rule_witness, run_rule_with,
    Divergence, Lockstep,
};
