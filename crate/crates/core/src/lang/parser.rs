use std::sync::Arc;

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics, SourceSpan};
use super::lexer::{tokenize, Kw, Sym, Tok, Token};

pub type PResult<T> = Result<T, Diagnostic>;

/// Token-stream parser shared by the rule, schema and scenario front ends.
pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Furthest failure seen while backtracking; reported when every
    /// alternative fails.
    furthest: Option<(usize, Diagnostic)>,
}

impl Parser {
    pub fn new(file: &str, text: &str) -> PResult<Parser> {
        let file: Arc<str> = Arc::from(file);
        Ok(Parser {
            toks: tokenize(&file, text)?,
            pos: 0,
            furthest: None,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.span(), msg))
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Kw(k) => format!("`{}`", k.text()),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Sym(s) => format!("`{}`", s.text()),
            Tok::BadArrow(a) => format!("`{a}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    pub fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", Self::describe(self.peek())))
    }

    pub fn eat_sym(&mut self, s: Sym) -> bool {
        if *self.peek() == Tok::Sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, k: Kw) -> bool {
        if *self.peek() == Tok::Kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: Sym) -> PResult<SourceSpan> {
        if self.eat_sym(s) {
            Ok(self.prev_span())
        } else {
            self.unexpected(&format!("`{}`", s.text()))
        }
    }

    pub fn expect_kw(&mut self, k: Kw) -> PResult<SourceSpan> {
        if self.eat_kw(k) {
            Ok(self.prev_span())
        } else {
            self.unexpected(&format!("`{}`", k.text()))
        }
    }

    pub fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let t = self.advance();
                Ok((n, t.span))
            }
            _ => self.unexpected("identifier"),
        }
    }

    pub fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("string literal"),
        }
    }

    pub fn int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.unexpected("integer"),
        }
    }

    /// Whether the current token is the bare identifier `word`.
    pub fn at_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(n) if n == word)
    }

    pub fn expect_eof(&self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    /// Skips tokens until `stop` matches or input ends.
    pub fn recover_to(&mut self, stop: impl Fn(&Tok) -> bool) {
        while !self.at_eof() && !stop(self.peek()) {
            self.advance();
        }
    }

    fn note_failure(&mut self, d: Diagnostic) {
        if self.furthest.as_ref().is_none_or(|(p, _)| self.pos >= *p) {
            self.furthest = Some((self.pos, d));
        }
    }

    // ---- predicates ----

    pub fn pred(&mut self) -> PResult<Pred> {
        self.pred_bp(pred_prec::EQUIV)
    }

    fn pred_bp(&mut self, min: u8) -> PResult<Pred> {
        let mut lhs = self.pred_prefix()?;
        loop {
            let (prec, right_assoc) = match self.peek() {
                Tok::Sym(Sym::Equiv) => (pred_prec::EQUIV, true),
                Tok::Sym(Sym::Implies) => (pred_prec::IMPLIES, false),
                Tok::Kw(Kw::Or) => (pred_prec::OR, false),
                Tok::Sym(Sym::Amp) => (pred_prec::AND, false),
                _ => break,
            };
            if prec < min {
                break;
            }
            let op = self.advance().tok;
            let rhs = self.pred_bp(if right_assoc { prec } else { prec + 1 })?;
            let span = lhs.span.join(&rhs.span);
            let (l, r) = (Box::new(lhs), Box::new(rhs));
            let kind = match op {
                Tok::Sym(Sym::Equiv) => PredKind::Equiv(l, r),
                Tok::Sym(Sym::Implies) => PredKind::Implies(l, r),
                Tok::Kw(Kw::Or) => PredKind::Or(l, r),
                _ => PredKind::And(l, r),
            };
            lhs = Pred { kind, span };
        }
        Ok(lhs)
    }

    fn pred_prefix(&mut self) -> PResult<Pred> {
        let start = self.span();
        match self.peek() {
            Tok::Kw(Kw::Not) => {
                self.advance();
                let inner = self.pred_bp(pred_prec::NOT)?;
                let span = start.join(&inner.span);
                Ok(Pred {
                    kind: PredKind::Not(Box::new(inner)),
                    span,
                })
            }
            Tok::Sym(Sym::Bang) | Tok::Sym(Sym::Hash) => {
                let universal = *self.peek() == Tok::Sym(Sym::Bang);
                self.advance();
                let vars = self.quantified_vars()?;
                self.expect_sym(Sym::Dot)?;
                self.expect_sym(Sym::LParen)?;
                let body = self.pred()?;
                let end = self.expect_sym(Sym::RParen)?;
                let kind = if universal {
                    PredKind::ForAll(vars, Box::new(body))
                } else {
                    PredKind::Exists(vars, Box::new(body))
                };
                Ok(Pred {
                    kind,
                    span: start.join(&end),
                })
            }
            Tok::Sym(Sym::LParen) => {
                // `(` opens either an expression operand or a nested predicate.
                let save = self.pos;
                match self.relation() {
                    Ok(p) => Ok(p),
                    Err(d) => {
                        self.note_failure(d);
                        self.pos = save;
                        self.advance();
                        match self.pred().and_then(|p| self.expect_sym(Sym::RParen).map(|_| p)) {
                            Ok(mut p) => {
                                self.furthest = None;
                                p.span = start.join(&self.prev_span());
                                Ok(p)
                            }
                            Err(d) => {
                                self.note_failure(d);
                                Err(self.furthest.take().map(|(_, d)| d).unwrap())
                            }
                        }
                    }
                }
            }
            _ => self.relation(),
        }
    }

    fn quantified_vars(&mut self) -> PResult<Vec<String>> {
        if self.eat_sym(Sym::LParen) {
            let mut vars = vec![self.ident()?.0];
            while self.eat_sym(Sym::Comma) {
                vars.push(self.ident()?.0);
            }
            self.expect_sym(Sym::RParen)?;
            Ok(vars)
        } else {
            Ok(vec![self.ident()?.0])
        }
    }

    fn relation(&mut self) -> PResult<Pred> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym(Sym::Eq) => CmpOp::Eq,
            Tok::Sym(Sym::Neq) => CmpOp::Neq,
            Tok::Sym(Sym::Colon) => CmpOp::In,
            Tok::Sym(Sym::NotIn) => CmpOp::NotIn,
            Tok::Sym(Sym::Subset) => CmpOp::Subset,
            Tok::Sym(Sym::NotSubset) => CmpOp::NotSubset,
            Tok::Sym(Sym::Lt) => CmpOp::Lt,
            Tok::Sym(Sym::Le) => CmpOp::Le,
            Tok::Sym(Sym::Gt) => CmpOp::Gt,
            Tok::Sym(Sym::Ge) => CmpOp::Ge,
            _ => return self.unexpected("a relational operator"),
        };
        self.advance();
        let rhs = self.expr()?;
        if op == CmpOp::In {
            let arrow = match self.peek() {
                Tok::Sym(Sym::PFun) => Some(Arrow::Partial),
                Tok::Sym(Sym::TFun) => Some(Arrow::Total),
                Tok::Sym(Sym::TInj) => Some(Arrow::Injection),
                Tok::Sym(Sym::TSurj) => Some(Arrow::Surjection),
                Tok::Sym(Sym::TBij) => Some(Arrow::Bijection),
                Tok::Sym(Sym::Rel) | Tok::BadArrow(_) => {
                    return self.error(format!(
                        "unsupported arrow {}; supported arrows are +-> --> >-> -->> >->>",
                        Self::describe(self.peek())
                    ))
                }
                _ => None,
            };
            if let Some(arrow) = arrow {
                self.advance();
                let ran = self.expr()?;
                let span = lhs.span.join(&ran.span);
                return Ok(Pred {
                    kind: PredKind::Arrow {
                        func: Box::new(lhs),
                        arrow,
                        dom: Box::new(rhs),
                        ran: Box::new(ran),
                    },
                    span,
                });
            }
        }
        let span = lhs.span.join(&rhs.span);
        Ok(Pred {
            kind: PredKind::Cmp(op, Box::new(lhs), Box::new(rhs)),
            span,
        })
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        self.expr_bp(0)
    }

    /// Expression without top-level `;`, for `;`-separated declaration lists.
    pub fn expr_no_comp(&mut self) -> PResult<Expr> {
        self.expr_bp(BinOp::Comp.precedence() + 1)
    }

    fn infix_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym(Sym::Plus) => BinOp::Add,
            Tok::Sym(Sym::Minus) => BinOp::Sub,
            Tok::Sym(Sym::Star) => BinOp::Mul,
            Tok::Sym(Sym::Slash) => BinOp::Div,
            Tok::Kw(Kw::Mod) => BinOp::Mod,
            Tok::Sym(Sym::DotDot) => BinOp::Interval,
            Tok::Sym(Sym::Union) => BinOp::Union,
            Tok::Sym(Sym::Inter) => BinOp::Inter,
            Tok::Sym(Sym::Maplet) => BinOp::Maplet,
            Tok::Sym(Sym::DomRes) => BinOp::DomRes,
            Tok::Sym(Sym::DomSub) => BinOp::DomSub,
            Tok::Sym(Sym::RanRes) => BinOp::RanRes,
            Tok::Sym(Sym::RanSub) => BinOp::RanSub,
            Tok::Sym(Sym::Semi) => BinOp::Comp,
            _ => return None,
        })
    }

    fn expr_bp(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.expr_prefix()?;
        while let Some(op) = self.infix_op() {
            let prec = op.precedence();
            if prec < min {
                break;
            }
            self.advance();
            let rhs = self.expr_bp(prec + 1)?;
            let span = lhs.span.join(&rhs.span);
            lhs = mk(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn expr_prefix(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Sym(Sym::Minus) {
            let start = self.span();
            self.advance();
            if let Tok::Int(n) = *self.peek() {
                let end = self.advance().span;
                let value = i64::try_from(-(n as i128))
                    .map_err(|_| Diagnostic::new(start.join(&end), "integer literal out of 64-bit range"))?;
                let lit = mk(ExprKind::Int(value), start.join(&end));
                return self.postfix(lit);
            }
            let inner = self.expr_bp(PREFIX_PREC)?;
            let span = start.join(&inner.span);
            return Ok(mk(ExprKind::Neg(Box::new(inner)), span));
        }
        let prim = self.primary()?;
        self.postfix(prim)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            match self.peek() {
                Tok::Sym(Sym::Tilde) => {
                    let end = self.advance().span;
                    let span = e.span.join(&end);
                    e = mk(ExprKind::Inverse(Box::new(e)), span);
                }
                Tok::Sym(Sym::LBracket) => {
                    self.advance();
                    let arg = self.expr()?;
                    let end = self.expect_sym(Sym::RBracket)?;
                    let span = e.span.join(&end);
                    e = mk(ExprKind::Image(Box::new(e), Box::new(arg)), span);
                }
                Tok::Sym(Sym::LParen) => {
                    self.advance();
                    let arg = self.call_args()?;
                    let end = self.expect_sym(Sym::RParen)?;
                    let span = e.span.join(&end);
                    e = mk(ExprKind::Apply(Box::new(e), Box::new(arg)), span);
                }
                _ => return Ok(e),
            }
        }
    }

    /// `f(a, b)` is sugar for `f(a |-> b)`.
    fn call_args(&mut self) -> PResult<Expr> {
        let mut arg = self.expr()?;
        while self.eat_sym(Sym::Comma) {
            let next = self.expr()?;
            let span = arg.span.join(&next.span);
            arg = mk(ExprKind::Bin(BinOp::Maplet, Box::new(arg), Box::new(next)), span);
        }
        Ok(arg)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(mk(ExprKind::Ident(name), start))
            }
            Tok::Int(n) => {
                self.advance();
                let v = i64::try_from(n)
                    .map_err(|_| Diagnostic::new(start.clone(), "integer literal out of 64-bit range"))?;
                Ok(mk(ExprKind::Int(v), start))
            }
            Tok::Kw(Kw::True) => {
                self.advance();
                Ok(mk(ExprKind::Bool(true), start))
            }
            Tok::Kw(Kw::False) => {
                self.advance();
                Ok(mk(ExprKind::Bool(false), start))
            }
            Tok::Kw(Kw::BoolSet) => {
                self.advance();
                Ok(mk(ExprKind::BoolSet, start))
            }
            Tok::Kw(kw @ (Kw::Dom | Kw::Ran | Kw::Card | Kw::Min | Kw::Max)) => {
                self.advance();
                let f = match kw {
                    Kw::Dom => Builtin::Dom,
                    Kw::Ran => Builtin::Ran,
                    Kw::Card => Builtin::Card,
                    Kw::Min => Builtin::Min,
                    _ => Builtin::Max,
                };
                self.expect_sym(Sym::LParen)?;
                let arg = self.expr()?;
                let end = self.expect_sym(Sym::RParen)?;
                Ok(mk(ExprKind::Builtin(f, Box::new(arg)), start.join(&end)))
            }
            Tok::Sym(Sym::LParen) => {
                self.advance();
                let mut inner = self.expr()?;
                let end = self.expect_sym(Sym::RParen)?;
                inner.span = start.join(&end);
                Ok(inner)
            }
            Tok::Sym(Sym::LBrace) => {
                self.advance();
                if self.eat_sym(Sym::RBrace) {
                    return Ok(mk(ExprKind::SetExt(Vec::new()), start.join(&self.prev_span())));
                }
                if let (Tok::Ident(var), Tok::Sym(Sym::Bar)) = (self.peek().clone(), self.peek_at(1)) {
                    self.advance();
                    self.advance();
                    let body = self.pred()?;
                    let end = self.expect_sym(Sym::RBrace)?;
                    return Ok(mk(
                        ExprKind::Compr {
                            var,
                            body: Box::new(body),
                        },
                        start.join(&end),
                    ));
                }
                let mut items = vec![self.expr()?];
                while self.eat_sym(Sym::Comma) {
                    items.push(self.expr()?);
                }
                let end = self.expect_sym(Sym::RBrace)?;
                Ok(mk(ExprKind::SetExt(items), start.join(&end)))
            }
            Tok::BadArrow(a) => self.error(format!("unknown operator `{a}`")),
            _ => self.unexpected("an expression"),
        }
    }

    // ---- rules ----

    fn rule(&mut self) -> PResult<Rule> {
        let start = self.expect_kw(Kw::Rule)?;
        let (name, _) = self.ident()?;
        let mut doc = String::new();
        let mut error_class = name.clone();
        let mut severity = Severity::Error;
        loop {
            if self.eat_kw(Kw::Doc) {
                doc = self.string()?;
            } else if self.eat_kw(Kw::Class) {
                error_class = self.ident()?.0;
            } else if self.eat_kw(Kw::Severity) {
                severity = if self.at_word("ERROR") {
                    Severity::Error
                } else if self.at_word("WARNING") {
                    Severity::Warning
                } else {
                    return self.unexpected("`ERROR` or `WARNING`");
                };
                self.advance();
            } else {
                break;
            }
        }
        let (bindings, filters) = if self.eat_kw(Kw::Where) {
            split_where(self.pred()?)
        } else {
            (Vec::new(), Vec::new())
        };
        self.expect_kw(Kw::Verify).map_err(|d| {
            if matches!(self.peek(), Tok::Kw(Kw::Rule) | Tok::Eof) {
                Diagnostic::new(d.span, format!("unterminated rule `{name}`: missing VERIFY clause"))
            } else {
                d
            }
        })?;
        let verify = self.pred()?;
        let msg_span = self.expect_kw(Kw::Message)?;
        let message = self.string()?;
        check_placeholders(&message, &bindings, &msg_span)?;
        let end = self.expect_kw(Kw::End).map_err(|d| {
            if matches!(self.peek(), Tok::Kw(Kw::Rule) | Tok::Eof) {
                Diagnostic::new(d.span, format!("unterminated rule `{name}`: missing END"))
            } else {
                d
            }
        })?;
        Ok(Rule {
            name,
            doc,
            error_class,
            severity,
            bindings,
            filters,
            verify,
            message,
            span: start.join(&end),
        })
    }
}

fn mk(kind: ExprKind, span: SourceSpan) -> Expr {
    Expr { kind, span, ty: None }
}

/// Leading `x : E` conjuncts with fresh `x` are bindings; the rest are
/// filters.
fn split_where(p: Pred) -> (Vec<Binding>, Vec<Pred>) {
    let parts: Vec<Pred> = conjuncts(&p).into_iter().cloned().collect();
    let mut bindings: Vec<Binding> = Vec::new();
    let mut filters = Vec::new();
    for part in parts {
        if filters.is_empty() {
            if let PredKind::Cmp(CmpOp::In, lhs, dom) = &part.kind {
                if let ExprKind::Ident(var) = &lhs.kind {
                    if !bindings.iter().any(|b| &b.var == var) {
                        bindings.push(Binding {
                            var: var.clone(),
                            domain: (**dom).clone(),
                        });
                        continue;
                    }
                }
            }
        }
        filters.push(part);
    }
    (bindings, filters)
}

/// Names referenced by `${name}` in a message template.
pub fn placeholders(template: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(i) = rest.find("${") {
        let after = &rest[i + 2..];
        let close = after
            .find('}')
            .ok_or_else(|| "unterminated `${` placeholder in message".to_string())?;
        out.push(&after[..close]);
        rest = &after[close + 1..];
    }
    Ok(out)
}

fn check_placeholders(message: &str, bindings: &[Binding], span: &SourceSpan) -> PResult<()> {
    let names = placeholders(message).map_err(|m| Diagnostic::new(span.clone(), m))?;
    for name in names {
        if !bindings.iter().any(|b| b.var == name) {
            return Err(Diagnostic::new(
                span.clone(),
                format!("message placeholder `${{{name}}}` does not name a WHERE binding"),
            ));
        }
    }
    Ok(())
}

/// Parses a `.bdr` rule file. Either every rule parses or only diagnostics
/// are returned.
pub fn parse_rule_file(file: &str, text: &str) -> Result<Vec<Rule>, Diagnostics> {
    let mut p = Parser::new(file, text)?;
    let mut rules: Vec<Rule> = Vec::new();
    let mut diags = Vec::new();
    while !p.at_eof() {
        match p.rule() {
            Ok(rule) => {
                if rules.iter().any(|r| r.name == rule.name) {
                    diags.push(Diagnostic::new(
                        rule.span.clone(),
                        format!("duplicate rule name `{}`", rule.name),
                    ));
                }
                rules.push(rule);
            }
            Err(d) => {
                diags.push(d);
                p.advance();
                p.recover_to(|t| *t == Tok::Kw(Kw::Rule));
            }
        }
    }
    if diags.is_empty() {
        Ok(rules)
    } else {
        Err(Diagnostics(diags))
    }
}

pub fn parse_predicate(text: &str) -> Result<Pred, Diagnostics> {
    let mut p = Parser::new("", text)?;
    let pred = p.pred()?;
    p.expect_eof()?;
    Ok(pred)
}

pub fn parse_expr(text: &str) -> Result<Expr, Diagnostics> {
    let mut p = Parser::new("", text)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}
