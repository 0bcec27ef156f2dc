use std::time::Instant;

use thiserror::Error;

use crate::eval::{Env, Evaluator, Naive, Optimized, Outcome, WdError};
use crate::ingest::Universe;
use crate::kernel::Value;
use crate::lang::{conjuncts, expr_to_string, pred_to_string, Expr, Pred, TypedRule};

use super::report::{Assignment, Counterexample, RuleError, RuleResult, Status};

/// The two evaluators disagreed; this is an engine defect, never a data one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluators diverged in rule `{rule}` on {term} with {}: primary gave {primary}, secondary gave {secondary}", show_assignment(.assignment))]
pub struct Divergence {
    pub rule: String,
    pub assignment: Assignment,
    pub term: String,
    pub primary: String,
    pub secondary: String,
}

fn show_assignment(a: &Assignment) -> String {
    if a.is_empty() {
        return "no bindings".into();
    }
    a.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ")
}

fn assignment(env: &Env) -> Assignment {
    env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Replaces each `${var}` with the canonical text of its value.
pub fn render_message(template: &str, env: &Env) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find('}') {
            Some(end) => {
                let name = &after[..end];
                match env.get(name) {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str(&rest[start..start + 3 + end]),
                }
                rest = &after[end + 1..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

struct Runner<'r, 'a> {
    rule: &'a TypedRule,
    ev: &'r mut dyn Evaluator<'a>,
    selected: u64,
    counterexamples: Vec<Counterexample>,
    /// Bindings of the first counterexample, or of the tuple that failed.
    witness: Option<Env>,
}

impl<'a> Runner<'_, 'a> {
    fn fail(&mut self, env: &Env, e: WdError) -> RuleError {
        self.witness = Some(env.clone());
        RuleError {
            kind: e.kind,
            detail: e.detail,
            span: e.span,
            assignment: assignment(env),
        }
    }

    fn bindings(&mut self, i: usize, env: &mut Env) -> Result<(), RuleError> {
        let rule = self.rule;
        if i == rule.bindings.len() {
            return self.tuple(env);
        }
        let b = &rule.bindings[i];
        let domain = match self.ev.eval_expr(&b.domain, env) {
            Ok(Value::Set(s)) => s,
            Ok(other) => panic!("binding domain evaluated to {other}"),
            Err(e) => return Err(self.fail(env, e)),
        };
        env.push(&b.var, Value::Bool(false));
        let mut result = Ok(());
        for v in domain.iter() {
            env.set_last(v.clone());
            result = self.bindings(i + 1, env);
            if result.is_err() {
                break;
            }
        }
        env.pop();
        result
    }

    fn tuple(&mut self, env: &mut Env) -> Result<(), RuleError> {
        let rule = self.rule;
        for f in &rule.filters {
            match self.ev.eval_pred(f, env) {
                Ok(true) => {}
                Ok(false) => return Ok(()),
                Err(e) => return Err(self.fail(env, e)),
            }
        }
        self.selected += 1;
        match self.ev.eval_pred(&rule.verify, env) {
            Ok(true) => Ok(()),
            Ok(false) => {
                let span = self.failing_conjunct(env);
                if self.witness.is_none() {
                    self.witness = Some(env.clone());
                }
                self.counterexamples.push(Counterexample {
                    assignment: assignment(env),
                    message: render_message(&rule.message, env),
                    span,
                });
                Ok(())
            }
            Err(e) => Err(self.fail(env, e)),
        }
    }

    /// Span of the first VERIFY conjunct that is FALSE.
    fn failing_conjunct(&mut self, env: &mut Env) -> crate::lang::SourceSpan {
        let verify = &self.rule.verify;
        for c in conjuncts(verify) {
            if let Ok(false) = self.ev.eval_pred(c, env) {
                return c.span.clone();
            }
        }
        verify.span.clone()
    }
}

/// Runs one rule with the given evaluator.
pub fn run_rule_with<'a>(rule: &'a TypedRule, ev: &mut dyn Evaluator<'a>) -> RuleResult {
    run_with_witness(rule, ev).0
}

/// Runs one rule and also returns the bindings of its first counterexample,
/// or of the tuple on which it hit an undefined term.
pub fn run_rule_witness(rule: &TypedRule, u: &Universe) -> (RuleResult, Option<Env>) {
    run_with_witness(rule, &mut Optimized::new(u))
}

fn run_with_witness<'a>(rule: &'a TypedRule, ev: &mut dyn Evaluator<'a>) -> (RuleResult, Option<Env>) {
    let start = Instant::now();
    let mut runner = Runner {
        rule,
        ev,
        selected: 0,
        counterexamples: Vec::new(),
        witness: None,
    };
    let outcome = runner.bindings(0, &mut Env::new());
    let timing_ms = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    let (status, error) = match outcome {
        Err(e) => (Status::Error, Some(e)),
        Ok(()) if runner.counterexamples.is_empty() => (Status::Ok, None),
        Ok(()) => (Status::Ko, None),
    };
    let result = RuleResult {
        name: rule.name.clone(),
        status,
        selected: runner.selected,
        counterexamples: runner.counterexamples,
        timing_ms,
        error,
    };
    (result, runner.witness)
}

/// Runs one rule with the optimized evaluator.
pub fn run_rule(rule: &TypedRule, u: &Universe) -> RuleResult {
    run_rule_with(rule, &mut Optimized::new(u))
}

/// Runs one rule with the reference evaluator.
pub fn run_rule_naive(rule: &TypedRule, u: &Universe) -> RuleResult {
    run_rule_with(rule, &mut Naive::new(u))
}

/// Evaluates every term with two evaluators and compares outcomes; values
/// must be equal and WD errors must have the same kind.
pub struct Lockstep<'r, 'a> {
    primary: &'r mut dyn Evaluator<'a>,
    secondary: &'r mut dyn Evaluator<'a>,
    rule: String,
    divergence: Option<Divergence>,
}

impl<'r, 'a> Lockstep<'r, 'a> {
    pub fn new(rule: &str, primary: &'r mut dyn Evaluator<'a>, secondary: &'r mut dyn Evaluator<'a>) -> Self {
        Lockstep {
            primary,
            secondary,
            rule: rule.to_string(),
            divergence: None,
        }
    }

    pub fn divergence(&self) -> Option<&Divergence> {
        self.divergence.as_ref()
    }

    fn compare<T: PartialEq + std::fmt::Display>(&mut self, term: String, env: &Env, a: &Outcome<T>, b: &Outcome<T>) {
        let same = match (a, b) {
            (Ok(x), Ok(y)) => x == y,
            (Err(x), Err(y)) => x.kind == y.kind,
            _ => false,
        };
        if !same && self.divergence.is_none() {
            let show = |o: &Outcome<T>| match o {
                Ok(v) => v.to_string(),
                Err(e) => format!("error {}", e.kind),
            };
            self.divergence = Some(Divergence {
                rule: self.rule.clone(),
                assignment: assignment(env),
                term,
                primary: show(a),
                secondary: show(b),
            });
        }
    }
}

impl<'a> Evaluator<'a> for Lockstep<'_, 'a> {
    fn eval_expr(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Value> {
        let a = self.primary.eval_expr(e, env);
        let b = self.secondary.eval_expr(e, env);
        self.compare(expr_to_string(e), env, &a, &b);
        a
    }

    fn eval_pred(&mut self, p: &'a Pred, env: &mut Env) -> Outcome<bool> {
        let a = self.primary.eval_pred(p, env);
        let b = self.secondary.eval_pred(p, env);
        if a.as_ref().map_err(|e| e.kind) != b.as_ref().map_err(|e| e.kind) {
            self.compare(pred_to_string(p), env, &a, &b);
        }
        a
    }
}

/// Runs `rule` with both evaluators side by side.
pub fn run_redundant(rule: &TypedRule, u: &Universe) -> Result<RuleResult, Divergence> {
    run_redundant_with(rule, &mut Optimized::new(u), &mut Naive::new(u))
}

pub fn run_redundant_with<'a>(
    rule: &'a TypedRule,
    primary: &mut dyn Evaluator<'a>,
    secondary: &mut dyn Evaluator<'a>,
) -> Result<RuleResult, Divergence> {
    let mut lock = Lockstep::new(&rule.name, primary, secondary);
    let result = run_rule_with(rule, &mut lock);
    match lock.divergence {
        Some(d) => Err(d),
        None => Ok(result),
    }
}
