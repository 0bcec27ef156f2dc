use std::fmt;

use crate::ingest::Universe;
use crate::lang::{expr_to_string, pred_to_string, Expr, Pred, PredKind};

use super::{Env, Evaluator, Naive, Outcome};

/// One step of an evaluation trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub depth: usize,
    pub text: String,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:width$}{}", "", self.text, width = self.depth * 2)
    }
}

/// Evaluates `p` with the reference evaluator, recording each connective,
/// each atomic predicate with its operand values, and every operand skipped
/// by a lazy connective.
pub fn trace_pred(p: &Pred, env: &Env, u: &Universe) -> (Outcome<bool>, Vec<TraceLine>) {
    let mut t = Tracer {
        ev: Naive::new(u),
        lines: Vec::new(),
    };
    let r = t.pred(p, &mut env.clone(), 0);
    (r, t.lines)
}

struct Tracer<'a> {
    ev: Naive<'a>,
    lines: Vec<TraceLine>,
}

fn show(r: &Outcome<bool>) -> String {
    match r {
        Ok(true) => "TRUE".into(),
        Ok(false) => "FALSE".into(),
        Err(e) => format!("undefined ({}: {})", e.kind, e.detail),
    }
}

impl<'a> Tracer<'a> {
    fn line(&mut self, depth: usize, text: String) {
        self.lines.push(TraceLine { depth, text });
    }

    fn operand(&mut self, e: &'a Expr, env: &mut Env, depth: usize) {
        if matches!(e.kind, crate::lang::ExprKind::Int(_) | crate::lang::ExprKind::Bool(_)) {
            return;
        }
        let text = match self.ev.eval_expr(e, env) {
            Ok(v) => format!("{} = {v}", expr_to_string(e)),
            Err(err) => format!("{} is undefined ({}: {})", expr_to_string(e), err.kind, err.detail),
        };
        self.line(depth, text);
    }

    fn pred(&mut self, p: &'a Pred, env: &mut Env, depth: usize) -> Outcome<bool> {
        let at = self.lines.len();
        self.line(depth, String::new());
        let r = match &p.kind {
            PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) => {
                let x = self.pred(a, env, depth + 1);
                let skip = match (&p.kind, &x) {
                    (_, Err(_)) => true,
                    (PredKind::And(..), Ok(false)) => true,
                    (PredKind::Or(..), Ok(true)) => true,
                    (PredKind::Implies(..), Ok(false)) => true,
                    _ => false,
                };
                if skip {
                    if x.is_ok() {
                        let why = format!("not evaluated: {}", pred_to_string(b));
                        self.line(depth + 1, why);
                    }
                    x.map(|v| if matches!(p.kind, PredKind::Implies(..)) { true } else { v })
                } else {
                    self.pred(b, env, depth + 1)
                }
            }
            PredKind::Equiv(a, b) => {
                let x = self.pred(a, env, depth + 1);
                match x {
                    Ok(x) => self.pred(b, env, depth + 1).map(|y| x == y),
                    Err(e) => Err(e),
                }
            }
            PredKind::Not(a) => self.pred(a, env, depth + 1).map(|v| !v),
            PredKind::ForAll(..) | PredKind::Exists(..) => self.ev.eval_pred(p, env),
            PredKind::Cmp(_, a, b) => {
                self.operand(a, env, depth + 1);
                self.operand(b, env, depth + 1);
                self.ev.eval_pred(p, env)
            }
            PredKind::Arrow { func, dom, ran, .. } => {
                self.operand(func, env, depth + 1);
                self.operand(dom, env, depth + 1);
                self.operand(ran, env, depth + 1);
                self.ev.eval_pred(p, env)
            }
        };
        self.lines[at].text = format!("{}  ==>  {}", pred_to_string(p), show(&r));
        r
    }
}
