use crate::kernel::Type;

use super::diag::SourceSpan;

/// Expression node. Equality compares structure only; spans and types are
/// ignored.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
    /// Filled in by the typechecker.
    pub ty: Option<Type>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    Int(i64),
    Bool(bool),
    /// The carrier `BOOL = {FALSE, TRUE}`.
    BoolSet,
    /// Set extension; empty for `{}`.
    SetExt(Vec<Expr>),
    /// `{x | x : E & P}`; the body holds the whole predicate.
    Compr { var: String, body: Box<Pred> },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Builtin(Builtin, Box<Expr>),
    Inverse(Box<Expr>),
    Image(Box<Expr>, Box<Expr>),
    Apply(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    /// `-` before typechecking; rewritten to `SetDiff` for set operands.
    Sub,
    /// `*` before typechecking; rewritten to `Product` for set operands.
    Mul,
    Div,
    Mod,
    Interval,
    Union,
    Inter,
    SetDiff,
    Product,
    Maplet,
    DomRes,
    DomSub,
    RanRes,
    RanSub,
    Comp,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub | BinOp::SetDiff => "-",
            BinOp::Mul | BinOp::Product => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Interval => "..",
            BinOp::Union => "\\/",
            BinOp::Inter => "/\\",
            BinOp::Maplet => "|->",
            BinOp::DomRes => "<|",
            BinOp::DomSub => "<<|",
            BinOp::RanRes => "|>",
            BinOp::RanSub => "|>>",
            BinOp::Comp => ";",
        }
    }

    /// Binding power; all binary expression operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Comp => 10,
            BinOp::Maplet => 20,
            BinOp::Union | BinOp::DomRes | BinOp::DomSub | BinOp::RanRes | BinOp::RanSub => 30,
            BinOp::Inter => 40,
            BinOp::Interval => 50,
            BinOp::Add | BinOp::Sub | BinOp::SetDiff => 60,
            BinOp::Mul | BinOp::Product | BinOp::Div | BinOp::Mod => 70,
        }
    }
}

pub const PREFIX_PREC: u8 = 80;
pub const POSTFIX_PREC: u8 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Dom,
    Ran,
    Card,
    Min,
    Max,
}

impl Builtin {
    pub fn text(self) -> &'static str {
        match self {
            Builtin::Dom => "dom",
            Builtin::Ran => "ran",
            Builtin::Card => "card",
            Builtin::Min => "min",
            Builtin::Max => "max",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pred {
    pub kind: PredKind,
    pub span: SourceSpan,
}

impl PartialEq for Pred {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredKind {
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    Equiv(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    ForAll(Vec<String>, Box<Pred>),
    Exists(Vec<String>, Box<Pred>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    /// `f : A op B` for a function arrow `op`.
    Arrow {
        func: Box<Expr>,
        arrow: Arrow,
        dom: Box<Expr>,
        ran: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Neq,
    In,
    NotIn,
    Subset,
    NotSubset,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn text(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "/=",
            CmpOp::In => ":",
            CmpOp::NotIn => "/:",
            CmpOp::Subset => "<:",
            CmpOp::NotSubset => "/<:",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Arrow {
    /// `+->`
    Partial,
    /// `-->`
    Total,
    /// `>->`
    Injection,
    /// `-->>`
    Surjection,
    /// `>->>`
    Bijection,
}

impl Arrow {
    pub const ALL: [Arrow; 5] = [
        Arrow::Partial,
        Arrow::Total,
        Arrow::Injection,
        Arrow::Surjection,
        Arrow::Bijection,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Arrow::Partial => "+->",
            Arrow::Total => "-->",
            Arrow::Injection => ">->",
            Arrow::Surjection => "-->>",
            Arrow::Bijection => ">->>",
        }
    }

    pub fn is_total(self) -> bool {
        !matches!(self, Arrow::Partial)
    }

    pub fn is_injective(self) -> bool {
        matches!(self, Arrow::Injection | Arrow::Bijection)
    }

    pub fn is_surjective(self) -> bool {
        matches!(self, Arrow::Surjection | Arrow::Bijection)
    }
}

/// Binary predicate connectives, loosest first: `<=>` (right-assoc), `=>`,
/// `or`, `&` (left-assoc), then prefix `not`.
pub mod pred_prec {
    pub const EQUIV: u8 = 1;
    pub const IMPLIES: u8 = 2;
    pub const OR: u8 = 3;
    pub const AND: u8 = 4;
    pub const NOT: u8 = 5;
    pub const ATOM: u8 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub var: String,
    pub domain: Expr,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub doc: String,
    pub error_class: String,
    pub severity: Severity,
    pub bindings: Vec<Binding>,
    pub filters: Vec<Pred>,
    pub verify: Pred,
    pub message: String,
    pub span: SourceSpan,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.doc == other.doc
            && self.error_class == other.error_class
            && self.severity == other.severity
            && self.bindings == other.bindings
            && self.filters == other.filters
            && self.verify == other.verify
            && self.message == other.message
    }
}

/// Left-nested `&` chain flattened in source order.
pub fn conjuncts(p: &Pred) -> Vec<&Pred> {
    fn walk<'a>(p: &'a Pred, out: &mut Vec<&'a Pred>) {
        if let PredKind::And(a, b) = &p.kind {
            walk(a, out);
            walk(b, out);
        } else {
            out.push(p);
        }
    }
    let mut out = Vec::new();
    walk(p, &mut out);
    out
}

/// Shape of a quantifier or comprehension body after splitting off the
/// `x : E` conjuncts that introduce each bound variable.
#[derive(Debug, Clone)]
pub struct Binders<'a> {
    /// One domain per variable, in declaration order.
    pub domains: Vec<(&'a str, &'a Expr)>,
    /// Remaining guard conjuncts, evaluated left to right.
    pub guards: Vec<&'a Pred>,
    /// `Q` of `!(x).(.. => Q)`; `None` for `#` and comprehensions.
    pub consequent: Option<&'a Pred>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinderShape {
    /// `!(xs).(xs : Es & .. => Q)`
    Universal,
    /// `#(xs).(xs : Es & ..)` and `{x | x : E & ..}`
    Conjunctive,
}

/// Splits a body per the bounded-domain rule: each variable must be
/// introduced, in order, by a leading conjunct `x : E`. The domain may refer
/// to earlier variables only; that part is checked by the typechecker.
pub fn split_binders<'a>(
    vars: &'a [String],
    body: &'a Pred,
    shape: BinderShape,
) -> Result<Binders<'a>, String> {
    let (ante, consequent) = match shape {
        BinderShape::Universal => match &body.kind {
            PredKind::Implies(a, q) => (&**a, Some(&**q)),
            _ => {
                return Err("universal quantifier body must have the form `x : E & .. => P`".into())
            }
        },
        BinderShape::Conjunctive => (body, None),
    };
    let parts = conjuncts(ante);
    let mut domains = Vec::with_capacity(vars.len());
    for (i, var) in vars.iter().enumerate() {
        let found = parts.get(i).and_then(|p| match &p.kind {
            PredKind::Cmp(CmpOp::In, lhs, dom) => match &lhs.kind {
                ExprKind::Ident(name) if name == var => Some(&**dom),
                _ => None,
            },
            _ => None,
        });
        match found {
            Some(dom) => domains.push((var.as_str(), dom)),
            None => {
                return Err(format!(
                    "bound variable `{var}` needs an enumerable domain: conjunct {} must be `{var} : E`",
                    i + 1
                ))
            }
        }
    }
    Ok(Binders {
        domains,
        guards: parts[vars.len()..].to_vec(),
        consequent,
    })
}

/// Free identifiers of an expression, excluding those bound inside it.
pub fn free_idents(e: &Expr, out: &mut Vec<String>) {
    let mut bound = Vec::new();
    expr_idents(e, &mut bound, out);
}

pub fn pred_free_idents(p: &Pred, out: &mut Vec<String>) {
    let mut bound = Vec::new();
    pred_idents(p, &mut bound, out);
}

fn expr_idents(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Ident(n) => {
            if !bound.contains(n) && !out.contains(n) {
                out.push(n.clone());
            }
        }
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::BoolSet => {}
        ExprKind::SetExt(items) => items.iter().for_each(|i| expr_idents(i, bound, out)),
        ExprKind::Compr { var, body } => {
            bound.push(var.clone());
            pred_idents(body, bound, out);
            bound.pop();
        }
        ExprKind::Neg(a) | ExprKind::Builtin(_, a) | ExprKind::Inverse(a) => {
            expr_idents(a, bound, out)
        }
        ExprKind::Bin(_, a, b) | ExprKind::Image(a, b) | ExprKind::Apply(a, b) => {
            expr_idents(a, bound, out);
            expr_idents(b, bound, out);
        }
    }
}

fn pred_idents(p: &Pred, bound: &mut Vec<String>, out: &mut Vec<String>) {
    match &p.kind {
        PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) | PredKind::Equiv(a, b) => {
            pred_idents(a, bound, out);
            pred_idents(b, bound, out);
        }
        PredKind::Not(a) => pred_idents(a, bound, out),
        PredKind::ForAll(vars, body) | PredKind::Exists(vars, body) => {
            let n = bound.len();
            bound.extend(vars.iter().cloned());
            pred_idents(body, bound, out);
            bound.truncate(n);
        }
        PredKind::Cmp(_, a, b) => {
            expr_idents(a, bound, out);
            expr_idents(b, bound, out);
        }
        PredKind::Arrow { func, dom, ran, .. } => {
            expr_idents(func, bound, out);
            expr_idents(dom, bound, out);
            expr_idents(ran, bound, out);
        }
    }
}
