use std::collections::BTreeMap;

use crate::kernel::Type;
use crate::lang::lexer::{Kw, Sym, Tok};
use crate::lang::parser::{PResult, Parser};
use crate::lang::{Arrow, Declarations, Diagnostic, Diagnostics, Expr, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum CarrierMode {
    Explicit(Vec<String>),
    /// Populated from the atoms observed in the data.
    Collect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierDecl {
    pub name: String,
    pub mode: CarrierMode,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Csv { file: String, columns: Vec<String> },
    Json { file: String, paths: Vec<String> },
    /// Inline value, as used by scenario fixtures.
    Literal(Expr),
}

impl Source {
    pub fn file(&self) -> Option<&str> {
        match self {
            Source::Csv { file, .. } | Source::Json { file, .. } => Some(file),
            Source::Literal(_) => None,
        }
    }

    fn arity(&self) -> Option<usize> {
        match self {
            Source::Csv { columns, .. } => Some(columns.len()),
            Source::Json { paths, .. } => Some(paths.len()),
            Source::Literal(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Set,
    Relation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDecl {
    pub name: String,
    pub ty: Type,
    /// Function arrow the declaration used, if any; loading enforces
    /// functionality for these.
    pub arrow: Option<Arrow>,
    pub source: Source,
    pub span: SourceSpan,
}

impl ConstantDecl {
    pub fn shape(&self) -> Shape {
        match &self.ty {
            Type::Power(e) if matches!(**e, Type::Prod(..)) && self.source.arity() != Some(1) => Shape::Relation,
            Type::Power(_) => Shape::Set,
            _ => Shape::Scalar,
        }
    }
}

/// Validated `.bds` schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub carriers: Vec<CarrierDecl>,
    pub constants: Vec<ConstantDecl>,
}

impl Schema {
    pub fn declarations(&self) -> Declarations {
        let carriers = self
            .carriers
            .iter()
            .map(|c| {
                let elems = match &c.mode {
                    CarrierMode::Explicit(e) => Some(e.clone()),
                    CarrierMode::Collect => None,
                };
                (c.name.clone(), elems)
            })
            .collect();
        let constants = self
            .constants
            .iter()
            .map(|c| (c.name.clone(), c.ty.clone()))
            .collect();
        Declarations::new(carriers, constants)
    }

    pub fn carrier(&self, name: &str) -> Option<&CarrierDecl> {
        self.carriers.iter().find(|c| c.name == name)
    }

    /// Distinct data files referenced by the constants, in declaration order.
    pub fn files(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.constants {
            if let Some(f) = c.source.file() {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        out
    }
}

/// Parses and validates a schema file.
pub fn load_schema(file: &str, text: &str) -> Result<Schema, Diagnostics> {
    let mut p = Parser::new(file, text)?;
    let schema = parse_sections(&mut p, |_| false)?;
    p.expect_eof()?;
    validate(&schema)?;
    Ok(schema)
}

/// Parses `SETS` / `CONSTANTS` sections until `stop` matches the current
/// token. Shared with the scenario parser.
pub(crate) fn parse_sections(p: &mut Parser, stop: impl Fn(&Tok) -> bool) -> PResult<Schema> {
    let mut schema = Schema::default();
    loop {
        if p.at_eof() || stop(p.peek()) {
            return Ok(schema);
        }
        if p.eat_kw(Kw::Sets) {
            loop {
                schema.carriers.push(carrier_decl(p)?);
                if !p.eat_sym(Sym::Semi) || !matches!(p.peek(), Tok::Ident(_)) {
                    break;
                }
            }
        } else if p.eat_kw(Kw::Constants) {
            loop {
                schema.constants.push(constant_decl(p)?);
                if !p.eat_sym(Sym::Semi) || !matches!(p.peek(), Tok::Ident(_)) {
                    break;
                }
            }
        } else {
            return p.unexpected("`SETS` or `CONSTANTS`");
        }
    }
}

fn carrier_decl(p: &mut Parser) -> PResult<CarrierDecl> {
    let (name, span) = p.ident()?;
    let mode = if p.eat_kw(Kw::Collect) {
        CarrierMode::Collect
    } else {
        p.expect_sym(Sym::Eq)?;
        p.expect_sym(Sym::LBrace)?;
        let mut elems = Vec::new();
        if !p.eat_sym(Sym::RBrace) {
            loop {
                let elem = match p.peek().clone() {
                    Tok::Str(s) => {
                        p.advance();
                        s
                    }
                    _ => p.ident()?.0,
                };
                elems.push(elem);
                if p.eat_sym(Sym::RBrace) {
                    break;
                }
                p.expect_sym(Sym::Comma)?;
            }
        }
        CarrierMode::Explicit(elems)
    };
    Ok(CarrierDecl { name, mode, span })
}

fn constant_decl(p: &mut Parser) -> PResult<ConstantDecl> {
    let (name, span) = p.ident()?;
    p.expect_sym(Sym::Colon)?;
    let (ty, arrow) = type_decl(p)?;
    let source = if p.eat_kw(Kw::From) {
        let file = p.string()?;
        if p.eat_kw(Kw::Cols) {
            Source::Csv {
                file,
                columns: name_list(p, true)?,
            }
        } else if p.eat_kw(Kw::Paths) {
            Source::Json {
                file,
                paths: name_list(p, false)?,
            }
        } else {
            return p.unexpected("`COLS` or `PATHS`");
        }
    } else if p.eat_sym(Sym::Eq) {
        Source::Literal(p.expr_no_comp()?)
    } else {
        return p.unexpected("`FROM` or `=`");
    };
    Ok(ConstantDecl {
        name,
        ty,
        arrow,
        source,
        span,
    })
}

fn name_list(p: &mut Parser, allow_idents: bool) -> PResult<Vec<String>> {
    p.expect_sym(Sym::LParen)?;
    let mut out = Vec::new();
    loop {
        let item = match p.peek().clone() {
            Tok::Str(s) => {
                p.advance();
                s
            }
            Tok::Ident(_) if allow_idents => p.ident()?.0,
            _ => return p.unexpected(if allow_idents { "column name" } else { "JSON path string" }),
        };
        out.push(item);
        if p.eat_sym(Sym::RParen) {
            return Ok(out);
        }
        p.expect_sym(Sym::Comma)?;
    }
}

/// `T`, or `A op B` for a relation/function arrow.
fn type_decl(p: &mut Parser) -> PResult<(Type, Option<Arrow>)> {
    let left = type_term(p)?;
    let arrow = match p.peek() {
        Tok::Sym(Sym::Rel) => None,
        Tok::Sym(Sym::PFun) => Some(Arrow::Partial),
        Tok::Sym(Sym::TFun) => Some(Arrow::Total),
        Tok::Sym(Sym::TInj) => Some(Arrow::Injection),
        Tok::Sym(Sym::TSurj) => Some(Arrow::Surjection),
        Tok::Sym(Sym::TBij) => Some(Arrow::Bijection),
        _ => return Ok((left, None)),
    };
    p.advance();
    let right = type_term(p)?;
    Ok((Type::relation(left, right), arrow))
}

fn type_term(p: &mut Parser) -> PResult<Type> {
    let mut t = type_factor(p)?;
    while p.eat_sym(Sym::Star) {
        t = Type::prod(t, type_factor(p)?);
    }
    Ok(t)
}

fn type_factor(p: &mut Parser) -> PResult<Type> {
    match p.peek().clone() {
        Tok::Kw(Kw::Integer) => {
            p.advance();
            Ok(Type::Integer)
        }
        Tok::Kw(Kw::BoolSet) => {
            p.advance();
            Ok(Type::Bool)
        }
        Tok::Kw(Kw::Pow) => {
            p.advance();
            p.expect_sym(Sym::LParen)?;
            let (inner, _) = type_decl(p)?;
            p.expect_sym(Sym::RParen)?;
            Ok(Type::power(inner))
        }
        Tok::Sym(Sym::LParen) => {
            p.advance();
            let (inner, _) = type_decl(p)?;
            p.expect_sym(Sym::RParen)?;
            Ok(inner)
        }
        Tok::Ident(name) => {
            p.advance();
            Ok(Type::Given(name))
        }
        _ => p.unexpected("a type"),
    }
}

fn is_scalar(t: &Type) -> bool {
    matches!(t, Type::Integer | Type::Bool | Type::Given(_))
}

pub(crate) fn validate(schema: &Schema) -> Result<(), Diagnostics> {
    let mut diags = Vec::new();
    let mut seen: BTreeMap<&str, &SourceSpan> = BTreeMap::new();
    for c in &schema.carriers {
        if seen.insert(&c.name, &c.span).is_some() {
            diags.push(Diagnostic::new(c.span.clone(), format!("duplicate declaration of `{}`", c.name)));
        }
        if let CarrierMode::Explicit(elems) = &c.mode {
            let mut sorted = elems.clone();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                diags.push(Diagnostic::new(
                    c.span.clone(),
                    format!("carrier `{}` lists element `{}` twice", c.name, w[0]),
                ));
            }
        }
    }
    for k in &schema.constants {
        if seen.insert(&k.name, &k.span).is_some() {
            diags.push(Diagnostic::new(k.span.clone(), format!("duplicate declaration of `{}`", k.name)));
        }
        let mut carriers = Default::default();
        k.ty.carriers(&mut carriers);
        for c in carriers {
            if schema.carrier(&c).is_none() {
                diags.push(Diagnostic::new(k.span.clone(), format!("unknown type name `{c}`")));
            }
        }
        if matches!(k.source, Source::Literal(_)) {
            continue;
        }
        let arity = k.source.arity().unwrap_or(0);
        let shape_ok = match (&k.ty, arity) {
            (t, 1) if is_scalar(t) => true,
            (Type::Power(e), 1) => is_scalar(e),
            (Type::Power(e), 2) => matches!(&**e, Type::Prod(a, b) if is_scalar(a) && is_scalar(b)),
            _ => false,
        };
        if !shape_ok {
            diags.push(Diagnostic::new(
                k.span.clone(),
                format!(
                    "`{}` : {} cannot be bound to {arity} column(s); use one column for scalars and sets, two for relations",
                    k.name, k.ty
                ),
            ));
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(Diagnostics(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_declaration() {
        let s = load_schema(
            "s.bds",
            r#"SETS t_signal COLLECT; t_interlocking COLLECT
               CONSTANTS
                 territory : t_signal +-> t_interlocking FROM "territory.csv" COLS (signal, interlocking)"#,
        )
        .unwrap();
        let k = &s.constants[0];
        assert_eq!(k.shape(), Shape::Relation);
        assert_eq!(k.arrow, Some(Arrow::Partial));
        assert_eq!(
            k.ty,
            Type::relation(Type::Given("t_signal".into()), Type::Given("t_interlocking".into()))
        );
        assert_eq!(
            k.source,
            Source::Csv {
                file: "territory.csv".into(),
                columns: vec!["signal".into(), "interlocking".into()]
            }
        );
        assert_eq!(s.carriers[0].mode, CarrierMode::Collect);
    }

    #[test]
    fn shapes_and_sources() {
        let s = load_schema(
            "",
            r#"SETS t = {a, b, "c-1"};
               CONSTANTS
                 n : INTEGER FROM "p.csv" COLS ("max speed");
                 ts : POW(t) FROM "t.json" PATHS ("items[].id");
                 r : t <-> INTEGER FROM "r.json" PATHS ("rows[].k", "rows[].v");
                 flags : POW(t * BOOL) FROM "f.csv" COLS (k, v);
                 lit : POW(t) = {a, b}"#,
        )
        .unwrap();
        let shapes: Vec<Shape> = s.constants.iter().map(|c| c.shape()).collect();
        assert_eq!(shapes, [Shape::Scalar, Shape::Set, Shape::Relation, Shape::Relation, Shape::Set]);
        assert_eq!(s.constants[2].arrow, None);
        assert_eq!(s.carriers[0].mode, CarrierMode::Explicit(vec!["a".into(), "b".into(), "c-1".into()]));
        assert_eq!(s.files(), ["p.csv", "t.json", "r.json", "f.csv"]);
    }

    #[test]
    fn duplicate_constant_is_rejected() {
        let err = load_schema(
            "",
            r#"SETS t COLLECT
               CONSTANTS territory : POW(t) FROM "a.csv" COLS (x);
                         territory : POW(t) FROM "b.csv" COLS (x)"#,
        )
        .unwrap_err();
        assert!(err.0[0].message.contains("duplicate declaration of `territory`"), "{err}");
    }

    #[test]
    fn unknown_type_and_bad_arity() {
        let err = load_schema("", r#"CONSTANTS x : POW(nope) FROM "a.csv" COLS (x)"#).unwrap_err();
        assert!(err.0[0].message.contains("unknown type name `nope`"));
        let err = load_schema(
            "",
            r#"SETS t COLLECT CONSTANTS x : t +-> t FROM "a.csv" COLS (a, b, c)"#,
        )
        .unwrap_err();
        assert!(err.0[0].message.contains("cannot be bound"));
        assert!(load_schema("", "CONSTANTS x INTEGER").is_err());
    }

    #[test]
    fn empty_schema() {
        assert_eq!(load_schema("", "// nothing\n").unwrap(), Schema::default());
    }
}
