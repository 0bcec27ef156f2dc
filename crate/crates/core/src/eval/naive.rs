use crate::ingest::Universe;
use crate::kernel::{SetV, Value};
use crate::lang::{split_binders, BinOp, BinderShape, Builtin, CmpOp, Expr, ExprKind, Pred, PredKind, SourceSpan};

use super::{bool_set, resolve_ident, too_large, Env, Evaluator, Outcome, WdError, WdKind, MAX_ENUMERATION};

/// Reference evaluator: direct recursive enumeration with linear scans, no
/// caching and no indexes. Serves as the test oracle and as the second
/// instance in redundant mode.
pub struct Naive<'a> {
    u: &'a Universe,
}

impl<'a> Naive<'a> {
    pub fn new(u: &'a Universe) -> Self {
        Naive { u }
    }

    fn elems(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Vec<Value>> {
        match self.eval_expr(e, env)? {
            Value::Set(s) => Ok(s.iter().cloned().collect()),
            other => panic!("{}: expected a set, got {other}", e.span),
        }
    }

    fn num(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<i128> {
        match self.eval_expr(e, env)? {
            Value::Int(n) => Ok(n as i128),
            other => panic!("{}: expected an integer, got {other}", e.span),
        }
    }

    fn quantify(
        &mut self,
        vars: &'a [String],
        body: &'a Pred,
        span: &SourceSpan,
        universal: bool,
        env: &mut Env,
    ) -> Outcome<bool> {
        let shape = if universal { BinderShape::Universal } else { BinderShape::Conjunctive };
        let b = split_binders(vars, body, shape).unwrap_or_else(|msg| panic!("{span}: {msg}"));
        let domains: Vec<&'a Expr> = b.domains.iter().map(|(_, d)| *d).collect();
        let guards = b.guards.clone();
        let consequent = b.consequent;
        self.nest(vars, &domains, 0, env, &mut |ev, env| {
            for g in &guards {
                if !ev.eval_pred(g, env)? {
                    // a failed guard makes the instance vacuous
                    return Ok(None);
                }
            }
            match consequent {
                Some(q) => Ok(if ev.eval_pred(q, env)? { None } else { Some(false) }),
                None => Ok(Some(true)),
            }
        })
        .map(|found| found.unwrap_or(universal))
    }

    /// Nested loops over binder domains; `leaf` returns `Some` to stop.
    fn nest(
        &mut self,
        vars: &'a [String],
        domains: &[&'a Expr],
        i: usize,
        env: &mut Env,
        leaf: &mut dyn FnMut(&mut Self, &mut Env) -> Outcome<Option<bool>>,
    ) -> Outcome<Option<bool>> {
        if i == vars.len() {
            return leaf(self, env);
        }
        let values = self.elems(domains[i], env)?;
        for v in values {
            env.push(&vars[i], v);
            let r = self.nest(vars, domains, i + 1, env, leaf);
            env.pop();
            if let Some(stop) = r? {
                return Ok(Some(stop));
            }
        }
        Ok(None)
    }
}

fn member(xs: &[Value], x: &Value) -> bool {
    xs.iter().any(|v| v == x)
}

fn split(p: &Value) -> (Value, Value) {
    match p {
        Value::Pair(p) => (p.0.clone(), p.1.clone()),
        other => panic!("expected a pair, got {other}"),
    }
}

fn set_of(items: Vec<Value>) -> Value {
    Value::Set(SetV::from_unsorted(items))
}

fn int_result(n: i128, span: &SourceSpan) -> Outcome<Value> {
    if n < i64::MIN as i128 || n > i64::MAX as i128 {
        Err(WdError::new(WdKind::ArithmeticOverflow, span, format!("{n} is outside the 64-bit range")))
    } else {
        Ok(Value::Int(n as i64))
    }
}

impl<'a> Evaluator<'a> for Naive<'a> {
    fn eval_expr(&mut self, e: &'a Expr, env: &mut Env) -> Outcome<Value> {
        let span = &e.span;
        match &e.kind {
            ExprKind::Ident(name) => Ok(resolve_ident(self.u, env, e, name)),
            ExprKind::Int(n) => Ok(Value::Int(*n)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::BoolSet => Ok(bool_set()),
            ExprKind::SetExt(items) => {
                let mut vals = Vec::new();
                for item in items {
                    vals.push(self.eval_expr(item, env)?);
                }
                Ok(set_of(vals))
            }
            ExprKind::Compr { var, body } => {
                let b = split_binders(std::slice::from_ref(var), body, BinderShape::Conjunctive)
                    .unwrap_or_else(|msg| panic!("{span}: {msg}"));
                let domain = self.elems(b.domains[0].1, env)?;
                let mut out = Vec::new();
                for v in domain {
                    env.push(var, v.clone());
                    let mut keep = Ok(true);
                    for g in &b.guards {
                        match self.eval_pred(g, env) {
                            Ok(true) => {}
                            other => {
                                keep = other;
                                break;
                            }
                        }
                    }
                    env.pop();
                    if keep? {
                        out.push(v);
                    }
                }
                Ok(set_of(out))
            }
            ExprKind::Neg(a) => {
                let n = self.num(a, env)?;
                int_result(-n, span)
            }
            ExprKind::Bin(op, a, b) => {
                let x = self.eval_expr(a, env)?;
                let y = self.eval_expr(b, env)?;
                apply_binary(*op, x, y, span)
            }
            ExprKind::Builtin(f, a) => {
                let s = self.elems(a, env)?;
                match f {
                    Builtin::Dom => Ok(set_of(s.iter().map(|p| split(p).0).collect())),
                    Builtin::Ran => Ok(set_of(s.iter().map(|p| split(p).1).collect())),
                    Builtin::Card => {
                        let mut distinct: Vec<Value> = Vec::new();
                        for v in s {
                            if !member(&distinct, &v) {
                                distinct.push(v);
                            }
                        }
                        int_result(distinct.len() as i128, span)
                    }
                    Builtin::Min | Builtin::Max => {
                        let mut best: Option<i64> = None;
                        for v in &s {
                            let n = v.as_int().expect("min/max over integers");
                            best = Some(match best {
                                None => n,
                                Some(b) if *f == Builtin::Min => b.min(n),
                                Some(b) => b.max(n),
                            });
                        }
                        best.map(Value::Int).ok_or_else(|| {
                            WdError::new(WdKind::MinMaxOfEmptySet, span, format!("{} of {{}}", f.text()))
                        })
                    }
                }
            }
            ExprKind::Inverse(a) => {
                let s = self.elems(a, env)?;
                Ok(set_of(
                    s.iter()
                        .map(|p| {
                            let (l, r) = split(p);
                            Value::pair(r, l)
                        })
                        .collect(),
                ))
            }
            ExprKind::Image(r, s) => {
                let r = self.elems(r, env)?;
                let s = self.elems(s, env)?;
                let mut out = Vec::new();
                for p in &r {
                    let (l, v) = split(p);
                    if member(&s, &l) {
                        out.push(v);
                    }
                }
                Ok(set_of(out))
            }
            ExprKind::Apply(f, arg) => {
                let f = self.elems(f, env)?;
                let x = self.eval_expr(arg, env)?;
                let images: Vec<Value> = f
                    .iter()
                    .map(split)
                    .filter(|(l, _)| *l == x)
                    .map(|(_, r)| r)
                    .collect();
                match images.len() {
                    1 => Ok(images.into_iter().next().unwrap()),
                    0 => Err(WdError::new(
                        WdKind::ApplicationOutsideDomain,
                        span,
                        format!("no pair with left component {x}"),
                    )),
                    n => Err(WdError::new(
                        WdKind::NonFunctionalApplication,
                        span,
                        format!("{n} pairs with left component {x}"),
                    )),
                }
            }
        }
    }

    fn eval_pred(&mut self, p: &'a Pred, env: &mut Env) -> Outcome<bool> {
        match &p.kind {
            PredKind::And(a, b) => {
                if self.eval_pred(a, env)? {
                    self.eval_pred(b, env)
                } else {
                    Ok(false)
                }
            }
            PredKind::Or(a, b) => {
                if self.eval_pred(a, env)? {
                    Ok(true)
                } else {
                    self.eval_pred(b, env)
                }
            }
            PredKind::Implies(a, b) => {
                if self.eval_pred(a, env)? {
                    self.eval_pred(b, env)
                } else {
                    Ok(true)
                }
            }
            PredKind::Equiv(a, b) => {
                let x = self.eval_pred(a, env)?;
                let y = self.eval_pred(b, env)?;
                Ok(x == y)
            }
            PredKind::Not(a) => self.eval_pred(a, env).map(|v| !v),
            PredKind::ForAll(vars, body) => self.quantify(vars, body, &p.span, true, env),
            PredKind::Exists(vars, body) => self.quantify(vars, body, &p.span, false, env),
            PredKind::Cmp(op, a, b) => {
                let x = self.eval_expr(a, env)?;
                let y = self.eval_expr(b, env)?;
                let as_vec = |v: &Value| -> Vec<Value> { v.as_set().expect("set operand").iter().cloned().collect() };
                let int = |v: &Value| v.as_int().expect("integer operand");
                Ok(match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Neq => x != y,
                    CmpOp::In => member(&as_vec(&y), &x),
                    CmpOp::NotIn => !member(&as_vec(&y), &x),
                    CmpOp::Subset | CmpOp::NotSubset => {
                        let ys = as_vec(&y);
                        let sub = as_vec(&x).iter().all(|v| member(&ys, v));
                        sub == (*op == CmpOp::Subset)
                    }
                    CmpOp::Lt => int(&x) < int(&y),
                    CmpOp::Le => int(&x) <= int(&y),
                    CmpOp::Gt => int(&x) > int(&y),
                    CmpOp::Ge => int(&x) >= int(&y),
                })
            }
            PredKind::Arrow { func, arrow, dom, ran } => {
                let f: Vec<(Value, Value)> = self.elems(func, env)?.iter().map(split).collect();
                let a = self.elems(dom, env)?;
                let b = self.elems(ran, env)?;
                let in_space = f.iter().all(|(l, r)| member(&a, l) && member(&b, r));
                let functional = f
                    .iter()
                    .all(|(l, r)| f.iter().all(|(l2, r2)| l != l2 || r == r2));
                let total = a.iter().all(|x| f.iter().any(|(l, _)| l == x));
                let injective = f
                    .iter()
                    .all(|(l, r)| f.iter().all(|(l2, r2)| r != r2 || l == l2));
                let surjective = b.iter().all(|y| f.iter().any(|(_, r)| r == y));
                Ok(in_space
                    && functional
                    && (!arrow.is_total() || total)
                    && (!arrow.is_injective() || injective)
                    && (!arrow.is_surjective() || surjective))
            }
        }
    }
}

fn apply_binary(op: BinOp, x: Value, y: Value, span: &SourceSpan) -> Outcome<Value> {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Interval => {
            let a = x.as_int().expect("integer operand") as i128;
            let b = y.as_int().expect("integer operand") as i128;
            match op {
                BinOp::Add => int_result(a + b, span),
                BinOp::Sub => int_result(a - b, span),
                BinOp::Mul => int_result(a * b, span),
                BinOp::Div => {
                    if b == 0 {
                        return Err(WdError::new(WdKind::DivisionByZero, span, "divisor is 0"));
                    }
                    // i128 division truncates toward zero
                    int_result(a / b, span)
                }
                BinOp::Mod => {
                    if a >= 0 && b > 0 {
                        int_result(a - b * (a / b), span)
                    } else {
                        Err(WdError::new(WdKind::ModOutOfDomain, span, format!("{a} mod {b}")))
                    }
                }
                _ => {
                    let size = if b >= a { (b - a + 1) as u128 } else { 0 };
                    if size > MAX_ENUMERATION as u128 {
                        return Err(too_large(span, "interval", size));
                    }
                    let mut out = Vec::new();
                    let mut k = a;
                    while k <= b {
                        out.push(Value::Int(k as i64));
                        k += 1;
                    }
                    Ok(set_of(out))
                }
            }
        }
        BinOp::Maplet => Ok(Value::pair(x, y)),
        _ => {
            let xs: Vec<Value> = x.as_set().expect("set operand").iter().cloned().collect();
            let ys: Vec<Value> = y.as_set().expect("set operand").iter().cloned().collect();
            let out: Vec<Value> = match op {
                BinOp::Union => xs.iter().chain(ys.iter()).cloned().collect(),
                BinOp::Inter => xs.iter().filter(|v| member(&ys, v)).cloned().collect(),
                BinOp::SetDiff => xs.iter().filter(|v| !member(&ys, v)).cloned().collect(),
                BinOp::Product => {
                    let size = xs.len() as u128 * ys.len() as u128;
                    if size > MAX_ENUMERATION as u128 {
                        return Err(too_large(span, "cartesian product", size));
                    }
                    let mut out = Vec::new();
                    for l in &xs {
                        for r in &ys {
                            out.push(Value::pair(l.clone(), r.clone()));
                        }
                    }
                    out
                }
                BinOp::DomRes => ys.iter().filter(|p| member(&xs, &split(p).0)).cloned().collect(),
                BinOp::DomSub => ys.iter().filter(|p| !member(&xs, &split(p).0)).cloned().collect(),
                BinOp::RanRes => xs.iter().filter(|p| member(&ys, &split(p).1)).cloned().collect(),
                BinOp::RanSub => xs.iter().filter(|p| !member(&ys, &split(p).1)).cloned().collect(),
                BinOp::Comp => {
                    let mut out = Vec::new();
                    for p in &xs {
                        let (a, b) = split(p);
                        for q in &ys {
                            let (c, d) = split(q);
                            if b == c {
                                out.push(Value::pair(a.clone(), d));
                            }
                        }
                    }
                    out
                }
                _ => unreachable!("arithmetic handled above"),
            };
            Ok(set_of(out))
        }
    }
}
