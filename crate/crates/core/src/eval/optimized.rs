use std::collections::HashMap;

use crate::ingest::Universe;
use crate::kernel::{SetV, Value};
use crate::lang::{
    free_idents, split_binders, Arrow, BinOp, BinderShape, Binders, Builtin, CmpOp, Expr, ExprKind, Pred, PredKind,
    SourceSpan,
};

use super::{bool_set, is_leaf, resolve_ident, too_large, Env, Evaluator, Outcome, WdError, WdKind, MAX_ENUMERATION};

enum Memo {
    /// Mentions a bound variable; evaluated afresh each time.
    Open,
    Closed(Outcome<Value>),
}

/// Evaluator tuned for large data.
///
/// Membership, application and image use binary search on canonical sets.
/// Subterms that mention no bound variable are evaluated once and reused.
pub struct Optimized<'a> {
    u: &'a Universe,
    memo: HashMap<usize, Memo>,
    binders: HashMap<usize, Binders<'a>>,
}

impl<'a> Optimized<'a> {
    pub fn new(u: &'a Universe) -> Self {
        Optimized {
            u,
            memo: HashMap::new(),
            binders: HashMap::new(),
        }
    }

    fn is_closed(&self, e: &Expr) -> bool {
        let mut free = Vec::new();
        free_idents(e, &mut free);
        free.iter().all(|n| self.u.is_global(n))
    }

    fn binders(&mut self, p: &'a Pred, vars: &'a [String], body: &'a Pred, shape: BinderShape) -> Binders<'a> {
        let key = p as *const Pred as usize;
        if let Some(b) = self.binders.get(&key) {
            return b.clone();
        }
        let b = split_binders(vars, body, shape).unwrap_or_else(|msg| panic!("{}: {msg}", p.span));
        self.binders.insert(key, b.clone());
        b
    }

    fn set(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<SetV> {
        match self.eval_expr(e, env)? {
            Value::Set(s) => Ok(s),
            other => panic!("{}: expected a set, got {other}", e.span),
        }
    }

    fn int(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<i64> {
        match self.eval_expr(e, env)? {
            Value::Int(n) => Ok(n),
            other => panic!("{}: expected an integer, got {other}", e.span),
        }
    }

    fn compute(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Value> {
        let span = &e.span;
        Ok(match &e.kind {
            ExprKind::Ident(name) => resolve_ident(self.u, env, e, name),
            ExprKind::Int(n) => Value::Int(*n),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::BoolSet => bool_set(),
            ExprKind::SetExt(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for item in items {
                    vals.push(self.eval_expr(item, env)?);
                }
                Value::Set(SetV::from_unsorted(vals))
            }
            ExprKind::Compr { var, body } => {
                let b = split_binders(std::slice::from_ref(var), body, BinderShape::Conjunctive)
                    .unwrap_or_else(|msg| panic!("{span}: {msg}"));
                let domain = self.set(b.domains[0].1, env)?;
                let mut out = Vec::new();
                env.push(var, Value::Bool(false));
                let res = (|| {
                    for v in domain.iter() {
                        env.set_last(v.clone());
                        if self.all(&b.guards, env)? {
                            out.push(v.clone());
                        }
                    }
                    Ok(())
                })();
                env.pop();
                res?;
                Value::Set(SetV::from_sorted(out))
            }
            ExprKind::Neg(a) => {
                let n = self.int(a, env)?;
                Value::Int(n.checked_neg().ok_or_else(|| overflow(span, format!("-({n})")))?)
            }
            ExprKind::Bin(op, a, b) => {
                let x = self.eval_expr(a, env)?;
                let y = self.eval_expr(b, env)?;
                binary(*op, x, y, span)?
            }
            ExprKind::Builtin(f, a) => {
                let s = self.set(a, env)?;
                match f {
                    Builtin::Dom => Value::Set(dom(&s)),
                    Builtin::Ran => Value::Set(SetV::from_unsorted(s.iter().map(|p| right(p).clone()).collect())),
                    Builtin::Card => Value::Int(s.len() as i64),
                    Builtin::Min | Builtin::Max => {
                        let v = if *f == Builtin::Min { s.as_slice().first() } else { s.as_slice().last() };
                        v.cloned().ok_or_else(|| {
                            WdError::new(WdKind::MinMaxOfEmptySet, span, format!("{} of the empty set", f.text()))
                        })?
                    }
                }
            }
            ExprKind::Inverse(a) => {
                let s = self.set(a, env)?;
                Value::Set(SetV::from_unsorted(
                    s.iter().map(|p| Value::pair(right(p).clone(), left(p).clone())).collect(),
                ))
            }
            ExprKind::Image(r, s) => {
                let r = self.set(r, env)?;
                let s = self.set(s, env)?;
                let mut out = Vec::new();
                for x in s.iter() {
                    out.extend(lookup(&r, x).iter().map(|p| right(p).clone()));
                }
                Value::Set(SetV::from_unsorted(out))
            }
            ExprKind::Apply(f, arg) => {
                let f = self.set(f, env)?;
                let x = self.eval_expr(arg, env)?;
                match lookup(&f, &x) {
                    [p] => right(p).clone(),
                    [] => {
                        return Err(WdError::new(
                            WdKind::ApplicationOutsideDomain,
                            span,
                            format!("{x} is not in the domain"),
                        ))
                    }
                    many => {
                        return Err(WdError::new(
                            WdKind::NonFunctionalApplication,
                            span,
                            format!("{x} has {} images", many.len()),
                        ))
                    }
                }
            }
        })
    }

    /// Conjunction of guards, left to right, stopping at the first FALSE.
    fn all(&mut self, guards: &[&'a Pred], env: &mut Env) -> Outcome<bool> {
        for g in guards {
            if !self.eval_pred(g, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Enumerates binder tuples; returns early with `stop` as soon as `leaf`
    /// yields it.
    fn enumerate(
        &mut self,
        b: &Binders<'a>,
        i: usize,
        env: &mut Env,
        stop: bool,
        leaf: &mut dyn FnMut(&mut Self, &mut Env) -> Outcome<bool>,
    ) -> Outcome<bool> {
        if i == b.domains.len() {
            return leaf(self, env);
        }
        let (var, dom) = b.domains[i];
        let domain = self.set(dom, env)?;
        env.push(var, Value::Bool(false));
        let mut result = Ok(!stop);
        for v in domain.iter() {
            env.set_last(v.clone());
            match self.enumerate(b, i + 1, env, stop, leaf) {
                Ok(r) if r == stop => {
                    result = Ok(stop);
                    break;
                }
                Ok(_) => {}
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        env.pop();
        result
    }

    fn membership(&mut self, a: &'a Expr, b: &'a Expr, env: &mut Env) -> Outcome<bool> {
        if let ExprKind::Bin(BinOp::Interval, lo, hi) = &b.kind {
            if !self.memo_closed(b) {
                let x = self.int(a, env)?;
                let lo = self.int(lo, env)?;
                let hi = self.int(hi, env)?;
                check_interval(lo, hi, &b.span)?;
                return Ok(lo <= x && x <= hi);
            }
        }
        let x = self.eval_expr(a, env)?;
        let s = self.set(b, env)?;
        Ok(s.contains(&x))
    }

    /// Whether `e` is known, or found, to be closed.
    fn memo_closed(&mut self, e: &Expr) -> bool {
        let key = e as *const Expr as usize;
        match self.memo.get(&key) {
            Some(Memo::Closed(_)) => true,
            Some(Memo::Open) => false,
            None => {
                let closed = self.is_closed(e);
                if !closed {
                    self.memo.insert(key, Memo::Open);
                }
                closed
            }
        }
    }
}

impl<'a> Evaluator<'a> for Optimized<'a> {
    fn eval_expr(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Value> {
        if is_leaf(e) {
            return self.compute(e, env);
        }
        let key = e as *const Expr as usize;
        match self.memo.get(&key) {
            Some(Memo::Closed(v)) => return v.clone(),
            Some(Memo::Open) => {}
            None => {
                if self.is_closed(e) {
                    let v = self.compute(e, env);
                    self.memo.insert(key, Memo::Closed(v.clone()));
                    return v;
                }
                self.memo.insert(key, Memo::Open);
            }
        }
        self.compute(e, env)
    }

    fn eval_pred(&mut self, p: &'a Pred, env: &mut Env) -> Outcome<bool> {
        match &p.kind {
            PredKind::And(a, b) => Ok(self.eval_pred(a, env)? && self.eval_pred(b, env)?),
            PredKind::Or(a, b) => Ok(self.eval_pred(a, env)? || self.eval_pred(b, env)?),
            PredKind::Implies(a, b) => Ok(!self.eval_pred(a, env)? || self.eval_pred(b, env)?),
            PredKind::Equiv(a, b) => {
                let x = self.eval_pred(a, env)?;
                let y = self.eval_pred(b, env)?;
                Ok(x == y)
            }
            PredKind::Not(a) => Ok(!self.eval_pred(a, env)?),
            PredKind::ForAll(vars, body) => {
                let b = self.binders(p, vars, body, BinderShape::Universal);
                let q = b.consequent.expect("universal body has a consequent");
                let guards = b.guards.clone();
                self.enumerate(&b, 0, env, false, &mut |ev, env| {
                    Ok(!ev.all(&guards, env)? || ev.eval_pred(q, env)?)
                })
            }
            PredKind::Exists(vars, body) => {
                let b = self.binders(p, vars, body, BinderShape::Conjunctive);
                let guards = b.guards.clone();
                self.enumerate(&b, 0, env, true, &mut |ev, env| ev.all(&guards, env))
            }
            PredKind::Cmp(op, a, b) => match op {
                CmpOp::In => self.membership(a, b, env),
                CmpOp::NotIn => Ok(!self.membership(a, b, env)?),
                CmpOp::Eq | CmpOp::Neq => {
                    let x = self.eval_expr(a, env)?;
                    let y = self.eval_expr(b, env)?;
                    Ok((x == y) == (*op == CmpOp::Eq))
                }
                CmpOp::Subset | CmpOp::NotSubset => {
                    let x = self.set(a, env)?;
                    let y = self.set(b, env)?;
                    let sub = x.len() <= y.len() && x.iter().all(|v| y.contains(v));
                    Ok(sub == (*op == CmpOp::Subset))
                }
                CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
                    let x = self.int(a, env)?;
                    let y = self.int(b, env)?;
                    Ok(match op {
                        CmpOp::Lt => x < y,
                        CmpOp::Le => x <= y,
                        CmpOp::Gt => x > y,
                        _ => x >= y,
                    })
                }
            },
            PredKind::Arrow { func, arrow, dom, ran } => {
                let f = self.set(func, env)?;
                let a = self.set(dom, env)?;
                let b = self.set(ran, env)?;
                Ok(arrow_holds(&f, *arrow, &a, &b))
            }
        }
    }
}

fn left(p: &Value) -> &Value {
    match p {
        Value::Pair(p) => &p.0,
        other => panic!("expected a pair, got {other}"),
    }
}

fn right(p: &Value) -> &Value {
    match p {
        Value::Pair(p) => &p.1,
        other => panic!("expected a pair, got {other}"),
    }
}

/// Pairs of `r` whose left component is `x`; contiguous in canonical order.
fn lookup<'s>(r: &'s SetV, x: &Value) -> &'s [Value] {
    let s = r.as_slice();
    let start = s.partition_point(|p| left(p) < x);
    let len = s[start..].partition_point(|p| left(p) == x);
    &s[start..start + len]
}

fn dom(r: &SetV) -> SetV {
    let mut out: Vec<Value> = Vec::with_capacity(r.len());
    for p in r.iter() {
        let l = left(p);
        if out.last() != Some(l) {
            out.push(l.clone());
        }
    }
    SetV::from_sorted(out)
}

fn overflow(span: &SourceSpan, what: String) -> WdError {
    WdError::new(WdKind::ArithmeticOverflow, span, format!("{what} overflows 64 bits"))
}

fn check_interval(lo: i64, hi: i64, span: &SourceSpan) -> Outcome<()> {
    if hi >= lo {
        let size = (hi as i128 - lo as i128 + 1) as u128;
        if size > MAX_ENUMERATION as u128 {
            return Err(too_large(span, &format!("interval {lo}..{hi}"), size));
        }
    }
    Ok(())
}

fn binary(op: BinOp, x: Value, y: Value, span: &SourceSpan) -> Outcome<Value> {
    let ints = || match (&x, &y) {
        (Value::Int(a), Value::Int(b)) => (*a, *b),
        _ => panic!("{span}: arithmetic on non-integers"),
    };
    let sets = || match (&x, &y) {
        (Value::Set(a), Value::Set(b)) => (a, b),
        _ => panic!("{span}: set operator on non-sets"),
    };
    Ok(match op {
        BinOp::Add => {
            let (a, b) = ints();
            Value::Int(a.checked_add(b).ok_or_else(|| overflow(span, format!("{a} + {b}")))?)
        }
        BinOp::Sub => {
            let (a, b) = ints();
            Value::Int(a.checked_sub(b).ok_or_else(|| overflow(span, format!("{a} - {b}")))?)
        }
        BinOp::Mul => {
            let (a, b) = ints();
            Value::Int(a.checked_mul(b).ok_or_else(|| overflow(span, format!("{a} * {b}")))?)
        }
        BinOp::Div => {
            let (a, b) = ints();
            if b == 0 {
                return Err(WdError::new(WdKind::DivisionByZero, span, format!("{a} / 0")));
            }
            Value::Int(a.checked_div(b).ok_or_else(|| overflow(span, format!("{a} / {b}")))?)
        }
        BinOp::Mod => {
            let (a, b) = ints();
            if a < 0 || b <= 0 {
                return Err(WdError::new(
                    WdKind::ModOutOfDomain,
                    span,
                    format!("{a} mod {b} needs a non-negative dividend and a positive divisor"),
                ));
            }
            Value::Int(a % b)
        }
        BinOp::Interval => {
            let (lo, hi) = ints();
            check_interval(lo, hi, span)?;
            Value::Set(SetV::from_sorted(if lo <= hi { (lo..=hi).map(Value::Int).collect() } else { Vec::new() }))
        }
        BinOp::Maplet => Value::pair(x, y),
        BinOp::Union => {
            let (a, b) = sets();
            Value::Set(merge(a, b, |ina, inb| ina || inb))
        }
        BinOp::Inter => {
            let (a, b) = sets();
            Value::Set(merge(a, b, |ina, inb| ina && inb))
        }
        BinOp::SetDiff => {
            let (a, b) = sets();
            Value::Set(merge(a, b, |ina, inb| ina && !inb))
        }
        BinOp::Product => {
            let (a, b) = sets();
            let size = a.len() as u128 * b.len() as u128;
            if size > MAX_ENUMERATION as u128 {
                return Err(too_large(span, "cartesian product", size));
            }
            let mut out = Vec::with_capacity(size as usize);
            for l in a.iter() {
                for r in b.iter() {
                    out.push(Value::pair(l.clone(), r.clone()));
                }
            }
            Value::Set(SetV::from_sorted(out))
        }
        BinOp::DomRes | BinOp::DomSub => {
            let (s, r) = sets();
            let keep = op == BinOp::DomRes;
            Value::Set(SetV::from_sorted(
                r.iter().filter(|p| s.contains(left(p)) == keep).cloned().collect(),
            ))
        }
        BinOp::RanRes | BinOp::RanSub => {
            let (r, s) = sets();
            let keep = op == BinOp::RanRes;
            Value::Set(SetV::from_sorted(
                r.iter().filter(|p| s.contains(right(p)) == keep).cloned().collect(),
            ))
        }
        BinOp::Comp => {
            let (r, s) = sets();
            let mut out = Vec::new();
            for p in r.iter() {
                for q in lookup(s, right(p)) {
                    out.push(Value::pair(left(p).clone(), right(q).clone()));
                }
            }
            Value::Set(SetV::from_unsorted(out))
        }
    })
}

/// Sorted merge keeping elements for which `keep(in_a, in_b)` holds.
fn merge(a: &SetV, b: &SetV, keep: impl Fn(bool, bool) -> bool) -> SetV {
    let (a, b) = (a.as_slice(), b.as_slice());
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        let (v, ina, inb) = match ord {
            std::cmp::Ordering::Less => {
                i += 1;
                (&a[i - 1], true, false)
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                (&b[j - 1], false, true)
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                (&a[i - 1], true, true)
            }
        };
        if keep(ina, inb) {
            out.push(v.clone());
        }
    }
    SetV::from_sorted(out)
}

fn arrow_holds(f: &SetV, arrow: Arrow, a: &SetV, b: &SetV) -> bool {
    if !f.iter().all(|p| a.contains(left(p)) && b.contains(right(p))) {
        return false;
    }
    let d = dom(f);
    if d.len() != f.len() {
        return false;
    }
    if arrow.is_total() && d.len() != a.len() {
        return false;
    }
    if arrow.is_injective() || arrow.is_surjective() {
        let mut rights: Vec<&Value> = f.iter().map(right).collect();
        rights.sort_unstable();
        rights.dedup();
        if arrow.is_injective() && rights.len() != f.len() {
            return false;
        }
        if arrow.is_surjective() && rights.len() != b.len() {
            return false;
        }
    }
    true
}
