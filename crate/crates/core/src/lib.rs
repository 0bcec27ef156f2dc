//! Formal data validation: safety rules written in a typed set-theoretic
//! predicate language are checked against configuration data, and every
//! counterexample is reported.

pub mod kernel;
pub mod lang;
pub mod ingest;
pub mod eval;
pub mod rules;
pub mod harness;
pub mod cli;
