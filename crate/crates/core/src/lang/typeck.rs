//! Type inference for expressions, predicates and rules.
//!
//! Inference runs over unification variables so that `{}` takes its element
//! type from context. A second pass writes resolved kernel types back into
//! every expression node and reports empty sets whose type stayed open.

use std::collections::BTreeMap;
use std::ops::Deref;

use crate::kernel::Type;

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics, SourceSpan};

/// Names a rule may refer to: carrier sets (with their element names when
/// enumerated) and typed constants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Declarations {
    /// `None` for carriers whose elements are only known after loading data.
    carriers: BTreeMap<String, Option<Vec<String>>>,
    constants: BTreeMap<String, Type>,
    /// element name -> carriers declaring it
    elements: BTreeMap<String, Vec<String>>,
}

impl Declarations {
    pub fn new(
        carriers: BTreeMap<String, Option<Vec<String>>>,
        constants: BTreeMap<String, Type>,
    ) -> Self {
        let mut elements: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (carrier, elems) in &carriers {
            for e in elems.iter().flatten() {
                elements.entry(e.clone()).or_default().push(carrier.clone());
            }
        }
        Declarations {
            carriers,
            constants,
            elements,
        }
    }

    pub fn carriers(&self) -> &BTreeMap<String, Option<Vec<String>>> {
        &self.carriers
    }

    pub fn constants(&self) -> &BTreeMap<String, Type> {
        &self.constants
    }

    pub fn element_carriers(&self, element: &str) -> Vec<&str> {
        self.elements
            .get(element)
            .map(|cs| cs.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Whether `name` denotes a constant, carrier or carrier element.
    pub fn is_global(&self, name: &str) -> bool {
        self.constants.contains_key(name)
            || self.carriers.contains_key(name)
            || !self.element_carriers(name).is_empty()
    }
}

impl crate::kernel::CarrierDecls for Declarations {
    fn has_carrier(&self, name: &str) -> bool {
        self.carriers.contains_key(name)
    }
}

/// A rule that passed typechecking; every expression node carries its type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedRule(Rule);

impl TypedRule {
    pub fn into_inner(self) -> Rule {
        self.0
    }
}

impl Deref for TypedRule {
    type Target = Rule;
    fn deref(&self) -> &Rule {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Ty {
    Int,
    Bool,
    Given(String),
    Prod(Box<Ty>, Box<Ty>),
    Pow(Box<Ty>),
    Var(usize),
}

fn pow(t: Ty) -> Ty {
    Ty::Pow(Box::new(t))
}

fn prod(a: Ty, b: Ty) -> Ty {
    Ty::Prod(Box::new(a), Box::new(b))
}

fn from_type(t: &Type) -> Ty {
    match t {
        Type::Integer => Ty::Int,
        Type::Bool => Ty::Bool,
        Type::Given(n) => Ty::Given(n.clone()),
        Type::Prod(a, b) => prod(from_type(a), from_type(b)),
        Type::Power(e) => pow(from_type(e)),
        Type::Any => unreachable!("declared types are concrete"),
    }
}

struct Checker<'d> {
    decls: &'d Declarations,
    subst: Vec<Option<Ty>>,
    scope: Vec<(String, Ty)>,
    slots: Vec<Ty>,
    diags: Vec<Diagnostic>,
}

impl<'d> Checker<'d> {
    fn new(decls: &'d Declarations) -> Self {
        Checker {
            decls,
            subst: Vec::new(),
            scope: Vec::new(),
            slots: Vec::new(),
            diags: Vec::new(),
        }
    }

    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Var(self.subst.len() - 1)
    }

    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Var(v) = t {
            match &self.subst[v] {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &Ty) -> Ty {
        match self.shallow(t) {
            Ty::Prod(a, b) => prod(self.resolve(&a), self.resolve(&b)),
            Ty::Pow(e) => pow(self.resolve(&e)),
            other => other,
        }
    }

    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Var(w) => v == w,
            Ty::Prod(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            Ty::Pow(e) => self.occurs(v, &e),
            _ => false,
        }
    }

    fn unify_inner(&mut self, a: &Ty, b: &Ty) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (Ty::Var(x), Ty::Var(y)) if x == y => true,
            (Ty::Var(x), t) | (t, Ty::Var(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.subst[*x] = Some(t.clone());
                true
            }
            (Ty::Int, Ty::Int) | (Ty::Bool, Ty::Bool) => true,
            (Ty::Given(x), Ty::Given(y)) => x == y,
            (Ty::Prod(a1, b1), Ty::Prod(a2, b2)) => self.unify_inner(a1, a2) && self.unify_inner(b1, b2),
            (Ty::Pow(x), Ty::Pow(y)) => self.unify_inner(x, y),
            _ => false,
        }
    }

    fn show(&self, t: &Ty) -> String {
        fn go(t: &Ty, out: &mut String) {
            match t {
                Ty::Int => out.push_str("INTEGER"),
                Ty::Bool => out.push_str("BOOL"),
                Ty::Given(n) => out.push_str(n),
                Ty::Prod(a, b) => {
                    go(a, out);
                    out.push_str(" * ");
                    if matches!(**b, Ty::Prod(..)) {
                        out.push('(');
                        go(b, out);
                        out.push(')');
                    } else {
                        go(b, out);
                    }
                }
                Ty::Pow(e) => {
                    out.push_str("POW(");
                    go(e, out);
                    out.push(')');
                }
                Ty::Var(_) => out.push('?'),
            }
        }
        let mut s = String::new();
        go(&self.resolve(t), &mut s);
        s
    }

    /// Unifies or reports a mismatch at `span`.
    fn expect(&mut self, actual: &Ty, expected: &Ty, span: &SourceSpan, what: &str) {
        let snapshot = self.subst.clone();
        if !self.unify_inner(actual, expected) {
            self.subst = snapshot;
            let msg = format!(
                "type mismatch in {what}: expected {}, found {}",
                self.show(expected),
                self.show(actual)
            );
            self.diags.push(Diagnostic::new(span.clone(), msg));
        }
    }

    fn error(&mut self, span: &SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(span.clone(), msg));
    }

    fn lookup(&self, name: &str) -> Option<Ty> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
    }

    fn bind(&mut self, name: &str, ty: Ty, span: &SourceSpan) {
        if self.decls.is_global(name) {
            self.error(span, format!("bound variable `{name}` shadows a universe name"));
        } else if self.lookup(name).is_some() {
            self.error(span, format!("variable `{name}` is already bound"));
        }
        self.scope.push((name.to_string(), ty));
    }

    fn alloc(&mut self) -> usize {
        self.slots.push(Ty::Int);
        self.slots.len() - 1
    }

    // ---- expressions ----

    fn expr(&mut self, e: &mut Expr) -> Ty {
        let slot = self.alloc();
        let ty = self.expr_inner(e);
        self.slots[slot] = ty.clone();
        ty
    }

    fn expr_inner(&mut self, e: &mut Expr) -> Ty {
        let span = e.span.clone();
        match &mut e.kind {
            ExprKind::Ident(name) => self.ident(name, &span),
            ExprKind::Int(_) => Ty::Int,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::BoolSet => pow(Ty::Bool),
            ExprKind::SetExt(items) => {
                let elem = self.fresh();
                for item in items.iter_mut() {
                    let t = self.expr(item);
                    let item_span = item.span.clone();
                    self.expect(&t, &elem, &item_span, "set extension element");
                }
                pow(elem)
            }
            ExprKind::Compr { var, body } => {
                let vars = vec![var.clone()];
                let depth = self.scope.len();
                self.binder_body(&vars, body, BinderShape::Conjunctive);
                let elem = self.scope.get(depth).map(|(_, t)| t.clone());
                self.scope.truncate(depth);
                pow(elem.unwrap_or_else(|| self.fresh()))
            }
            ExprKind::Neg(a) => {
                let t = self.expr(a);
                self.expect(&t, &Ty::Int, &a.span, "unary minus");
                Ty::Int
            }
            ExprKind::Bin(op, a, b) => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                self.binary(op, &ta, &tb, a, b, &span)
            }
            ExprKind::Builtin(f, a) => {
                let t = self.expr(a);
                match f {
                    Builtin::Dom | Builtin::Ran => {
                        let (x, y) = (self.fresh(), self.fresh());
                        self.expect(&t, &pow(prod(x.clone(), y.clone())), &a.span, f.text());
                        pow(if *f == Builtin::Dom { x } else { y })
                    }
                    Builtin::Card => {
                        let x = self.fresh();
                        self.expect(&t, &pow(x), &a.span, "card");
                        Ty::Int
                    }
                    Builtin::Min | Builtin::Max => {
                        self.expect(&t, &pow(Ty::Int), &a.span, f.text());
                        Ty::Int
                    }
                }
            }
            ExprKind::Inverse(a) => {
                let t = self.expr(a);
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(&t, &pow(prod(x.clone(), y.clone())), &a.span, "inverse");
                pow(prod(y, x))
            }
            ExprKind::Image(r, s) => {
                let tr = self.expr(r);
                let ts = self.expr(s);
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(&tr, &pow(prod(x.clone(), y.clone())), &r.span, "relational image");
                self.expect(&ts, &pow(x), &s.span, "relational image argument");
                pow(y)
            }
            ExprKind::Apply(f, arg) => {
                let tf = self.expr(f);
                let ta = self.expr(arg);
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(&tf, &pow(prod(x.clone(), y.clone())), &f.span, "function application");
                self.expect(&ta, &x, &arg.span, "function argument");
                y
            }
        }
    }

    fn ident(&mut self, name: &str, span: &SourceSpan) -> Ty {
        if let Some(t) = self.lookup(name) {
            return t;
        }
        if let Some(t) = self.decls.constants.get(name) {
            return from_type(t);
        }
        if self.decls.carriers.contains_key(name) {
            return pow(Ty::Given(name.to_string()));
        }
        match self.decls.element_carriers(name).as_slice() {
            [carrier] => Ty::Given(carrier.to_string()),
            [] => {
                self.error(span, format!("unbound identifier `{name}`"));
                self.fresh()
            }
            many => {
                let msg = format!("element `{name}` is ambiguous between carriers {}", many.join(", "));
                self.error(span, msg);
                self.fresh()
            }
        }
    }

    fn binary(&mut self, op: &mut BinOp, ta: &Ty, tb: &Ty, a: &Expr, b: &Expr, span: &SourceSpan) -> Ty {
        if matches!(op, BinOp::Sub | BinOp::Mul) {
            let shapes = (self.shallow(ta), self.shallow(tb));
            let set_op = match shapes {
                (Ty::Int, _) | (_, Ty::Int) => false,
                (Ty::Pow(_), _) | (_, Ty::Pow(_)) => true,
                _ => {
                    self.error(span, format!("cannot tell whether `{}` is arithmetic or a set operator", op.text()));
                    return self.fresh();
                }
            };
            if set_op {
                *op = if *op == BinOp::Sub { BinOp::SetDiff } else { BinOp::Product };
            }
        }
        let what = format!("operator `{}`", op.text());
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                self.expect(ta, &Ty::Int, &a.span, &what);
                self.expect(tb, &Ty::Int, &b.span, &what);
                Ty::Int
            }
            BinOp::Interval => {
                self.expect(ta, &Ty::Int, &a.span, &what);
                self.expect(tb, &Ty::Int, &b.span, &what);
                pow(Ty::Int)
            }
            BinOp::Union | BinOp::Inter | BinOp::SetDiff => {
                let x = self.fresh();
                self.expect(ta, &pow(x.clone()), &a.span, &what);
                self.expect(tb, &pow(x.clone()), &b.span, &what);
                pow(x)
            }
            BinOp::Product => {
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(ta, &pow(x.clone()), &a.span, &what);
                self.expect(tb, &pow(y.clone()), &b.span, &what);
                pow(prod(x, y))
            }
            BinOp::Maplet => prod(ta.clone(), tb.clone()),
            BinOp::DomRes | BinOp::DomSub => {
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(ta, &pow(x.clone()), &a.span, &what);
                self.expect(tb, &pow(prod(x.clone(), y.clone())), &b.span, &what);
                pow(prod(x, y))
            }
            BinOp::RanRes | BinOp::RanSub => {
                let (x, y) = (self.fresh(), self.fresh());
                self.expect(ta, &pow(prod(x.clone(), y.clone())), &a.span, &what);
                self.expect(tb, &pow(y.clone()), &b.span, &what);
                pow(prod(x, y))
            }
            BinOp::Comp => {
                let (x, y, z) = (self.fresh(), self.fresh(), self.fresh());
                self.expect(ta, &pow(prod(x.clone(), y.clone())), &a.span, &what);
                self.expect(tb, &pow(prod(y, z.clone())), &b.span, &what);
                pow(prod(x, z))
            }
        }
    }

    // ---- predicates ----

    fn pred(&mut self, p: &mut Pred) {
        match &mut p.kind {
            PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) | PredKind::Equiv(a, b) => {
                self.pred(a);
                self.pred(b);
            }
            PredKind::Not(a) => self.pred(a),
            PredKind::ForAll(vars, body) => {
                let depth = self.scope.len();
                self.binder_body(vars, body, BinderShape::Universal);
                self.scope.truncate(depth);
            }
            PredKind::Exists(vars, body) => {
                let depth = self.scope.len();
                self.binder_body(vars, body, BinderShape::Conjunctive);
                self.scope.truncate(depth);
            }
            PredKind::Cmp(op, a, b) => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                let what = format!("`{}`", op.text());
                match op {
                    CmpOp::Eq | CmpOp::Neq => self.expect(&tb, &ta, &b.span, &what),
                    CmpOp::In | CmpOp::NotIn => self.expect(&tb, &pow(ta), &b.span, &what),
                    CmpOp::Subset | CmpOp::NotSubset => {
                        let x = self.fresh();
                        self.expect(&ta, &pow(x.clone()), &a.span, &what);
                        self.expect(&tb, &pow(x), &b.span, &what);
                    }
                    CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge => {
                        self.expect(&ta, &Ty::Int, &a.span, &what);
                        self.expect(&tb, &Ty::Int, &b.span, &what);
                    }
                }
            }
            PredKind::Arrow { func, arrow, dom, ran } => {
                let tf = self.expr(func);
                let td = self.expr(dom);
                let tr = self.expr(ran);
                let (x, y) = (self.fresh(), self.fresh());
                let what = format!("`{}`", arrow.text());
                self.expect(&td, &pow(x.clone()), &dom.span, &what);
                self.expect(&tr, &pow(y.clone()), &ran.span, &what);
                self.expect(&tf, &pow(prod(x, y)), &func.span, &what);
            }
        }
    }

    /// Types a quantifier or comprehension body, leaving the bound variables
    /// pushed on the scope in order.
    fn binder_body(&mut self, vars: &[String], body: &mut Pred, shape: BinderShape) {
        let split = split_binders(vars, body, shape).map(|_| ());
        if let Err(msg) = split {
            self.error(&body.span, format!("quantified variable without enumerable domain: {msg}"));
            // Still visit every node so slot order stays aligned.
            for v in vars {
                let t = self.fresh();
                self.scope.push((v.clone(), t));
            }
            self.pred(body);
            return;
        }
        // The split succeeded: walk the body in source order, treating the
        // first `vars.len()` conjuncts as binders.
        let mut binder_index = 0;
        self.walk_binders(vars, body, shape, &mut binder_index);
    }

    fn walk_binders(&mut self, vars: &[String], p: &mut Pred, shape: BinderShape, next: &mut usize) {
        match (&mut p.kind, shape) {
            (PredKind::Implies(ante, cons), BinderShape::Universal) => {
                self.walk_binders(vars, ante, BinderShape::Conjunctive, next);
                self.pred(cons);
            }
            (PredKind::And(a, b), BinderShape::Conjunctive) => {
                self.walk_binders(vars, a, shape, next);
                self.walk_binders(vars, b, shape, next);
            }
            (PredKind::Cmp(CmpOp::In, lhs, dom), BinderShape::Conjunctive) if *next < vars.len() => {
                let var = &vars[*next];
                *next += 1;
                let later = &vars[*next - 1..];
                let mut free = Vec::new();
                free_idents(dom, &mut free);
                if let Some(bad) = free.iter().find(|n| later.contains(n)) {
                    let msg = format!("domain of `{var}` must not depend on `{bad}`");
                    self.error(&dom.span, msg);
                }
                let slot = self.alloc();
                let td = self.expr(dom);
                let elem = self.fresh();
                let what = format!("domain of `{var}`");
                self.expect(&td, &pow(elem.clone()), &dom.span, &what);
                self.slots[slot] = elem.clone();
                let lhs_span = lhs.span.clone();
                self.bind(var, elem, &lhs_span);
            }
            _ => self.pred(p),
        }
    }

    // ---- write-back ----

    fn finish_expr(&mut self, e: &mut Expr, next: &mut usize) {
        let ty = self.resolve(&self.slots[*next].clone());
        *next += 1;
        let concrete = to_type(&ty);
        if concrete.contains_any() && matches!(&e.kind, ExprKind::SetExt(items) if items.is_empty()) {
            self.error(&e.span, "cannot determine the type of this empty set");
        }
        e.ty = Some(concrete);
        match &mut e.kind {
            ExprKind::Ident(_) | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::BoolSet => {}
            ExprKind::SetExt(items) => items.iter_mut().for_each(|i| self.finish_expr(i, next)),
            ExprKind::Compr { body, .. } => self.finish_pred(body, next),
            ExprKind::Neg(a) | ExprKind::Builtin(_, a) | ExprKind::Inverse(a) => self.finish_expr(a, next),
            ExprKind::Bin(_, a, b) | ExprKind::Image(a, b) | ExprKind::Apply(a, b) => {
                self.finish_expr(a, next);
                self.finish_expr(b, next);
            }
        }
    }

    fn finish_pred(&mut self, p: &mut Pred, next: &mut usize) {
        match &mut p.kind {
            PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) | PredKind::Equiv(a, b) => {
                self.finish_pred(a, next);
                self.finish_pred(b, next);
            }
            PredKind::Not(a) => self.finish_pred(a, next),
            PredKind::ForAll(_, body) | PredKind::Exists(_, body) => self.finish_pred(body, next),
            PredKind::Cmp(_, a, b) => {
                self.finish_expr(a, next);
                self.finish_expr(b, next);
            }
            PredKind::Arrow { func, dom, ran, .. } => {
                self.finish_expr(func, next);
                self.finish_expr(dom, next);
                self.finish_expr(ran, next);
            }
        }
    }

    fn into_result(mut self) -> Result<(), Diagnostics> {
        if self.diags.is_empty() {
            Ok(())
        } else {
            self.diags.dedup();
            Err(Diagnostics(self.diags))
        }
    }
}

fn to_type(t: &Ty) -> Type {
    match t {
        Ty::Int => Type::Integer,
        Ty::Bool => Type::Bool,
        Ty::Given(n) => Type::Given(n.clone()),
        Ty::Prod(a, b) => Type::prod(to_type(a), to_type(b)),
        Ty::Pow(e) => Type::power(to_type(e)),
        Ty::Var(_) => Type::Any,
    }
}

/// Typechecks a standalone expression; `scope` gives the types of free
/// variables.
pub fn typecheck_expr(e: &mut Expr, decls: &Declarations, scope: &[(String, Type)]) -> Result<Type, Diagnostics> {
    let mut c = Checker::new(decls);
    c.scope = scope.iter().map(|(n, t)| (n.clone(), from_type(t))).collect();
    c.expr(e);
    let mut next = 0;
    c.finish_expr(e, &mut next);
    let ty = e.ty.clone().unwrap_or(Type::Any);
    c.into_result().map(|_| ty)
}

/// Like [`typecheck_expr`], with the result type fixed by the caller; used
/// for literal constant values such as `{}` whose type comes from a
/// declaration.
pub fn typecheck_expr_as(e: &mut Expr, decls: &Declarations, expected: &Type) -> Result<(), Diagnostics> {
    let mut c = Checker::new(decls);
    let t = c.expr(e);
    let span = e.span.clone();
    c.expect(&t, &from_type(expected), &span, "declared value");
    let mut next = 0;
    c.finish_expr(e, &mut next);
    c.into_result()
}

pub fn typecheck_pred(p: &mut Pred, decls: &Declarations, scope: &[(String, Type)]) -> Result<(), Diagnostics> {
    let mut c = Checker::new(decls);
    c.scope = scope.iter().map(|(n, t)| (n.clone(), from_type(t))).collect();
    c.pred(p);
    let mut next = 0;
    c.finish_pred(p, &mut next);
    c.into_result()
}

pub fn typecheck_rule(mut rule: Rule, decls: &Declarations) -> Result<TypedRule, Diagnostics> {
    let mut c = Checker::new(decls);
    for b in rule.bindings.iter_mut() {
        let t = c.expr(&mut b.domain);
        let elem = c.fresh();
        let what = format!("WHERE binding `{}`", b.var);
        c.expect(&t, &pow(elem.clone()), &b.domain.span, &what);
        let span = b.domain.span.clone();
        c.bind(&b.var, elem, &span);
    }
    for f in rule.filters.iter_mut() {
        c.pred(f);
    }
    c.pred(&mut rule.verify);
    let mut next = 0;
    for b in rule.bindings.iter_mut() {
        c.finish_expr(&mut b.domain, &mut next);
    }
    for f in rule.filters.iter_mut() {
        c.finish_pred(f, &mut next);
    }
    c.finish_pred(&mut rule.verify, &mut next);
    c.into_result().map(|_| TypedRule(rule))
}

/// Types of the WHERE variables of a typed rule, in declaration order.
pub fn binding_types(rule: &TypedRule) -> Vec<(String, Type)> {
    rule.bindings
        .iter()
        .map(|b| {
            let elem = b
                .domain
                .ty
                .as_ref()
                .and_then(|t| t.element().cloned())
                .unwrap_or(Type::Any);
            (b.var.clone(), elem)
        })
        .collect()
}

// ---- post-pass validator ----

/// Re-derives each node's type from its children's annotations and reports
/// the first inconsistency.
pub fn validate_expr(e: &Expr) -> Result<(), String> {
    let ty = e.ty.as_ref().ok_or_else(|| format!("untyped node {:?}", e.kind))?;
    let child = |c: &Expr| -> Result<Type, String> {
        validate_expr(c)?;
        Ok(c.ty.clone().unwrap())
    };
    let mismatch = || Err(format!("inconsistent type {ty} at {}", e.span));
    let ok = |cond: bool| if cond { Ok(()) } else { mismatch() };
    let elem = |t: &Type| t.element().cloned();
    let pair = |t: &Type| t.element().and_then(|p| p.components().map(|(a, b)| (a.clone(), b.clone())));
    match &e.kind {
        ExprKind::Ident(_) => Ok(()),
        ExprKind::Int(_) => ok(*ty == Type::Integer),
        ExprKind::Bool(_) => ok(*ty == Type::Bool),
        ExprKind::BoolSet => ok(*ty == Type::power(Type::Bool)),
        ExprKind::SetExt(items) => {
            let Some(el) = elem(ty) else { return mismatch() };
            for i in items {
                if child(i)? != el {
                    return mismatch();
                }
            }
            Ok(())
        }
        ExprKind::Compr { body, .. } => {
            validate_pred(body)?;
            ok(elem(ty).is_some())
        }
        ExprKind::Neg(a) => ok(child(a)? == Type::Integer && *ty == Type::Integer),
        ExprKind::Bin(op, a, b) => {
            let (ta, tb) = (child(a)?, child(b)?);
            let int = Type::Integer;
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                    ok(ta == int && tb == int && *ty == int)
                }
                BinOp::Interval => ok(ta == int && tb == int && *ty == Type::power(int)),
                BinOp::Union | BinOp::Inter | BinOp::SetDiff => ok(ta == tb && ta == *ty && elem(ty).is_some()),
                BinOp::Product => match (elem(&ta), elem(&tb)) {
                    (Some(x), Some(y)) => ok(*ty == Type::relation(x, y)),
                    _ => mismatch(),
                },
                BinOp::Maplet => ok(*ty == Type::prod(ta, tb)),
                BinOp::DomRes | BinOp::DomSub => match pair(&tb) {
                    Some((x, _)) => ok(ta == Type::power(x) && *ty == tb),
                    None => mismatch(),
                },
                BinOp::RanRes | BinOp::RanSub => match pair(&ta) {
                    Some((_, y)) => ok(tb == Type::power(y) && *ty == ta),
                    None => mismatch(),
                },
                BinOp::Comp => match (pair(&ta), pair(&tb)) {
                    (Some((x, y1)), Some((y2, z))) => ok(y1 == y2 && *ty == Type::relation(x, z)),
                    _ => mismatch(),
                },
            }
        }
        ExprKind::Builtin(f, a) => {
            let ta = child(a)?;
            match f {
                Builtin::Dom => ok(pair(&ta).map(|(x, _)| Type::power(x)).as_ref() == Some(ty)),
                Builtin::Ran => ok(pair(&ta).map(|(_, y)| Type::power(y)).as_ref() == Some(ty)),
                Builtin::Card => ok(elem(&ta).is_some() && *ty == Type::Integer),
                Builtin::Min | Builtin::Max => ok(ta == Type::power(Type::Integer) && *ty == Type::Integer),
            }
        }
        ExprKind::Inverse(a) => {
            let ta = child(a)?;
            ok(pair(&ta).map(|(x, y)| Type::relation(y, x)).as_ref() == Some(ty))
        }
        ExprKind::Image(r, s) => {
            let (tr, ts) = (child(r)?, child(s)?);
            match pair(&tr) {
                Some((x, y)) => ok(ts == Type::power(x) && *ty == Type::power(y)),
                None => mismatch(),
            }
        }
        ExprKind::Apply(f, a) => {
            let (tf, ta) = (child(f)?, child(a)?);
            match pair(&tf) {
                Some((x, y)) => ok(ta == x && *ty == y),
                None => mismatch(),
            }
        }
    }
}

pub fn validate_pred(p: &Pred) -> Result<(), String> {
    match &p.kind {
        PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) | PredKind::Equiv(a, b) => {
            validate_pred(a)?;
            validate_pred(b)
        }
        PredKind::Not(a) | PredKind::ForAll(_, a) | PredKind::Exists(_, a) => validate_pred(a),
        PredKind::Cmp(op, a, b) => {
            validate_expr(a)?;
            validate_expr(b)?;
            let (ta, tb) = (a.ty.clone().unwrap(), b.ty.clone().unwrap());
            let good = match op {
                CmpOp::Eq | CmpOp::Neq => ta == tb,
                CmpOp::In | CmpOp::NotIn => tb == Type::power(ta),
                CmpOp::Subset | CmpOp::NotSubset => ta == tb && ta.element().is_some(),
                _ => ta == Type::Integer && tb == Type::Integer,
            };
            if good {
                Ok(())
            } else {
                Err(format!("inconsistent operand types for `{}` at {}", op.text(), p.span))
            }
        }
        PredKind::Arrow { func, dom, ran, .. } => {
            validate_expr(func)?;
            validate_expr(dom)?;
            validate_expr(ran)?;
            let (tf, td, tr) = (func.ty.clone().unwrap(), dom.ty.clone().unwrap(), ran.ty.clone().unwrap());
            match (td.element(), tr.element()) {
                (Some(x), Some(y)) if tf == Type::relation(x.clone(), y.clone()) => Ok(()),
                _ => Err(format!("inconsistent arrow operand types at {}", p.span)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_expr, parse_predicate, parse_rule_file};

    fn signalling() -> Declarations {
        let sig = Type::Given("t_signal".into());
        let ik = Type::Given("t_interlocking".into());
        Declarations::new(
            BTreeMap::from([
                ("t_signal".into(), None),
                ("t_interlocking".into(), Some(vec!["ik1".into(), "ik2".into()])),
            ]),
            BTreeMap::from([
                ("territory".into(), Type::relation(sig.clone(), ik.clone())),
                ("linked".into(), Type::relation(sig, ik)),
            ]),
        )
    }

    fn ty_of(text: &str, scope: &[(String, Type)]) -> Result<Type, Diagnostics> {
        let mut e = parse_expr(text).unwrap();
        let t = typecheck_expr(&mut e, &signalling(), scope)?;
        validate_expr(&e).unwrap();
        Ok(t)
    }

    #[test]
    fn examples() {
        assert_eq!(ty_of("card({1,2}) + 1", &[]).unwrap(), Type::Integer);
        let err = ty_of("{1} \\/ {TRUE}", &[]).unwrap_err();
        assert!(err.0[0].message.contains("type mismatch"), "{err}");
        let scope = [("sig".to_string(), Type::Given("t_signal".into()))];
        assert_eq!(ty_of("territory(sig)", &scope).unwrap(), Type::Given("t_interlocking".into()));
    }

    #[test]
    fn minus_and_star_are_disambiguated() {
        let mut e = parse_expr("{1,2} - {2}").unwrap();
        typecheck_expr(&mut e, &Declarations::default(), &[]).unwrap();
        assert!(matches!(e.kind, ExprKind::Bin(BinOp::SetDiff, ..)));
        let mut e = parse_expr("3 - 2").unwrap();
        typecheck_expr(&mut e, &Declarations::default(), &[]).unwrap();
        assert!(matches!(e.kind, ExprKind::Bin(BinOp::Sub, ..)));
        assert_eq!(ty_of("{1} * {TRUE}", &[]).unwrap(), Type::relation(Type::Integer, Type::Bool));
        assert_eq!(ty_of("2 * 3", &[]).unwrap(), Type::Integer);
    }

    #[test]
    fn empty_sets_take_type_from_context() {
        assert_eq!(ty_of("{} \\/ {1}", &[]).unwrap(), Type::power(Type::Integer));
        assert_eq!(ty_of("dom(territory) - {}", &[]).unwrap(), Type::power(Type::Given("t_signal".into())));
        let mut p = parse_predicate("{} = {}").unwrap();
        let err = typecheck_pred(&mut p, &Declarations::default(), &[]).unwrap_err();
        assert!(err.0[0].message.contains("empty set"), "{err}");
        let mut p = parse_predicate("{} <: {1}").unwrap();
        typecheck_pred(&mut p, &Declarations::default(), &[]).unwrap();
        validate_pred(&p).unwrap();
    }

    #[test]
    fn identifier_resolution() {
        assert_eq!(ty_of("ik1", &[]).unwrap(), Type::Given("t_interlocking".into()));
        assert_eq!(ty_of("t_signal", &[]).unwrap(), Type::power(Type::Given("t_signal".into())));
        assert!(ty_of("nowhere", &[]).unwrap_err().0[0].message.contains("unbound identifier"));
    }

    #[test]
    fn bounded_domain_rule() {
        let d = Declarations::default();
        let mut ok = parse_predicate("!(x, y).(x : 1..3 & y : x..3 => x <= y)").unwrap();
        typecheck_pred(&mut ok, &d, &[]).unwrap();
        validate_pred(&ok).unwrap();

        let mut no_domain = parse_predicate("!(x).(x > 0 => x > 1)").unwrap();
        let err = typecheck_pred(&mut no_domain, &d, &[]).unwrap_err();
        assert!(err.0[0].message.contains("enumerable domain"), "{err}");

        let mut self_ref = parse_predicate("#(x).(x : {x} & x = 1)").unwrap();
        assert!(typecheck_pred(&mut self_ref, &d, &[]).is_err());

        let mut not_impl = parse_predicate("!(x).(x : 1..3)").unwrap();
        assert!(typecheck_pred(&mut not_impl, &d, &[]).is_err());

        let mut compr = parse_expr("{x | x : 1..5 & x mod 2 = 0}").unwrap();
        assert_eq!(typecheck_expr(&mut compr, &d, &[]).unwrap(), Type::power(Type::Integer));
        validate_expr(&compr).unwrap();
    }

    #[test]
    fn shadowing_is_rejected() {
        let d = signalling();
        let mut p = parse_predicate("#(linked).(linked : 1..2 & linked = 1)").unwrap();
        assert!(typecheck_pred(&mut p, &d, &[]).unwrap_err().0[0].message.contains("shadows"));
        let mut p = parse_predicate("#(x).(x : 1..2 & #(x).(x : 1..2 & x = 1))").unwrap();
        assert!(typecheck_pred(&mut p, &d, &[]).is_err());
    }

    #[test]
    fn rules() {
        let text = r#"
            RULE r1 WHERE sig : dom(territory)
            VERIFY sig : dom(linked) & linked(sig) = territory(sig)
            MESSAGE "signal ${sig} not linked" END"#;
        let rule = parse_rule_file("", text).unwrap().remove(0);
        let typed = typecheck_rule(rule, &signalling()).unwrap();
        assert_eq!(binding_types(&typed), vec![("sig".to_string(), Type::Given("t_signal".into()))]);
        validate_pred(&typed.verify).unwrap();

        let bad = r#"RULE r1 WHERE sig : dom(territory) VERIFY lnked(sig) = ik1 MESSAGE "" END"#;
        let rule = parse_rule_file("", bad).unwrap().remove(0);
        let err = typecheck_rule(rule, &signalling()).unwrap_err();
        assert!(err.0[0].message.contains("unbound identifier `lnked`"));

        let shadow = r#"RULE r1 WHERE territory : 1..2 VERIFY 1 = 1 MESSAGE "" END"#;
        let rule = parse_rule_file("", shadow).unwrap().remove(0);
        assert!(typecheck_rule(rule, &signalling()).is_err());
    }

    #[test]
    fn diagnostics_are_deterministic() {
        let text = "x + TRUE = {1} & nowhere : {}";
        let run = || {
            let mut p = parse_predicate(text).unwrap();
            typecheck_pred(&mut p, &signalling(), &[("x".into(), Type::Integer)]).unwrap_err()
        };
        assert_eq!(run(), run());
    }
}
