//! Well-definedness aware evaluation of typed expressions and predicates.
//!
//! Two independent implementations share one contract: [`Optimized`] uses
//! binary search over canonical sets and memoizes closed subterms, while
//! [`Naive`] enumerates everything directly. Outcomes (value, or WD error
//! kind) must always agree.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Universe;
use crate::kernel::{Type, Value};
use crate::lang::{Expr, ExprKind, Pred, SourceSpan};

mod naive;
mod optimized;
mod trace;

pub use naive::Naive;
pub use optimized::Optimized;
pub use trace::{trace_pred, TraceLine};

/// Largest set an interval or cartesian product may denote.
pub const MAX_ENUMERATION: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WdKind {
    ApplicationOutsideDomain,
    NonFunctionalApplication,
    DivisionByZero,
    ModOutOfDomain,
    MinMaxOfEmptySet,
    ArithmeticOverflow,
    UnboundedQuantification,
}

impl WdKind {
    pub const ALL: [WdKind; 7] = [
        WdKind::ApplicationOutsideDomain,
        WdKind::NonFunctionalApplication,
        WdKind::DivisionByZero,
        WdKind::ModOutOfDomain,
        WdKind::MinMaxOfEmptySet,
        WdKind::ArithmeticOverflow,
        WdKind::UnboundedQuantification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WdKind::ApplicationOutsideDomain => "application-outside-domain",
            WdKind::NonFunctionalApplication => "non-functional-application",
            WdKind::DivisionByZero => "division-by-zero",
            WdKind::ModOutOfDomain => "mod-out-of-domain",
            WdKind::MinMaxOfEmptySet => "min-max-of-empty-set",
            WdKind::ArithmeticOverflow => "arithmetic-overflow",
            WdKind::UnboundedQuantification => "unbounded-quantification",
        }
    }

    pub fn parse(text: &str) -> Option<WdKind> {
        WdKind::ALL.into_iter().find(|k| k.as_str() == text)
    }
}

impl fmt::Display for WdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A term without a defined value, located at the offending node.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{span}: {kind}: {detail}")]
pub struct WdError {
    pub kind: WdKind,
    pub span: SourceSpan,
    pub detail: String,
}

impl WdError {
    pub fn new(kind: WdKind, span: &SourceSpan, detail: impl Into<String>) -> Self {
        WdError {
            kind,
            span: span.clone(),
            detail: detail.into(),
        }
    }
}

pub type Outcome<T> = Result<T, WdError>;

/// Bound variables, innermost last.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    vars: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.push(name, value);
        self
    }

    pub fn push(&mut self, name: &str, value: Value) {
        self.vars.push((name.to_string(), value));
    }

    pub fn pop(&mut self) -> Option<(String, Value)> {
        self.vars.pop()
    }

    /// Replaces the value of the innermost variable.
    pub fn set_last(&mut self, value: Value) {
        if let Some(last) = self.vars.last_mut() {
            last.1 = value;
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.vars.truncate(len);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(n, v)| (n.as_str(), v))
    }
}

/// Common interface of the two evaluators.
///
/// The `'a` lifetime ties an evaluator to the terms it evaluates, which lets
/// implementations key internal caches by node identity.
pub trait Evaluator<'a> {
    fn eval_expr(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Value>;
    fn eval_pred(&mut self, p: &'a Pred, env: &mut Env) -> Outcome<bool>;
}

pub fn eval_expr(e: &Expr, env: &Env, u: &Universe) -> Outcome<Value> {
    Optimized::new(u).eval_expr(e, &mut env.clone())
}

pub fn eval_pred(p: &Pred, env: &Env, u: &Universe) -> Outcome<bool> {
    Optimized::new(u).eval_pred(p, &mut env.clone())
}

pub fn eval_naive_expr(e: &Expr, env: &Env, u: &Universe) -> Outcome<Value> {
    Naive::new(u).eval_expr(e, &mut env.clone())
}

pub fn eval_naive_pred(p: &Pred, env: &Env, u: &Universe) -> Outcome<bool> {
    Naive::new(u).eval_pred(p, &mut env.clone())
}

/// Value of an identifier: bound variable, constant, carrier, then carrier
/// element.
pub(crate) fn resolve_ident(u: &Universe, env: &Env, e: &Expr, name: &str) -> Value {
    if let Some(v) = env.get(name) {
        return v.clone();
    }
    if let Some(c) = u.constant(name) {
        return c.value.clone();
    }
    if let Some(s) = u.carrier(name) {
        return Value::Set(s.clone());
    }
    if let Some(Type::Given(carrier)) = &e.ty {
        return Value::atom(carrier, name);
    }
    match u.element(name) {
        Some(a) => Value::Atom(a),
        None => panic!("identifier `{name}` at {} is unbound; terms must be typechecked first", e.span),
    }
}

pub(crate) fn bool_set() -> Value {
    Value::set([Value::Bool(false), Value::Bool(true)])
}

pub(crate) fn too_large(span: &SourceSpan, what: &str, size: u128) -> WdError {
    WdError::new(
        WdKind::UnboundedQuantification,
        span,
        format!("{what} has {size} elements, more than the enumeration limit of {MAX_ENUMERATION}"),
    )
}

pub(crate) fn is_leaf(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Ident(_) | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::BoolSet
    )
}

#[cfg(test)]
mod tests;
