use crate::eval::WdKind;
use crate::ingest::{parse_sections, Schema, Source};
use crate::lang::lexer::{Kw, Sym, Tok};
use crate::lang::parser::{PResult, Parser};
use crate::lang::{Diagnostic, Diagnostics, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    Ok,
    Ko {
        count: usize,
        /// Each entry must match a distinct counterexample on the listed
        /// variables.
        at: Vec<Vec<(String, String)>>,
    },
    Error(WdKind),
}

impl Expectation {
    pub fn describe(&self) -> String {
        match self {
            Expectation::Ok => "OK".into(),
            Expectation::Ko { count, .. } => format!("KO {count}"),
            Expectation::Error(kind) => format!("ERROR {kind}"),
        }
    }
}

/// A rule test: an inline fixture and the verdict the rule must reach on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub rule: String,
    /// Rule file the rule must come from, if pinned.
    pub rule_file: Option<String>,
    pub fixture: Schema,
    pub expect: Expectation,
    pub span: SourceSpan,
}

/// Parses a `.bdt` scenario file.
pub fn parse_scenario_file(file: &str, text: &str) -> Result<Vec<Scenario>, Diagnostics> {
    let mut p = Parser::new(file, text)?;
    let mut out: Vec<Scenario> = Vec::new();
    let mut diags = Vec::new();
    while !p.at_eof() {
        match scenario(&mut p) {
            Ok(s) => {
                if out.iter().any(|o| o.name == s.name) {
                    diags.push(Diagnostic::new(s.span.clone(), format!("duplicate scenario name `{}`", s.name)));
                }
                out.push(s);
            }
            Err(d) => {
                diags.push(d);
                p.advance();
                p.recover_to(|t| *t == Tok::Kw(Kw::Scenario));
            }
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Diagnostics(diags))
    }
}

fn scenario(p: &mut Parser) -> PResult<Scenario> {
    let start = p.expect_kw(Kw::Scenario)?;
    let (name, _) = p.ident()?;
    p.expect_kw(Kw::Rule)?;
    let (rule, _) = p.ident()?;
    let rule_file = if p.at_word("IN") {
        p.advance();
        Some(p.string()?)
    } else {
        None
    };
    let fixture = parse_sections(p, |t| *t == Tok::Kw(Kw::Expect))?;
    for c in &fixture.constants {
        if !matches!(c.source, Source::Literal(_)) {
            return Err(Diagnostic::new(
                c.span.clone(),
                format!("fixture constant `{}` must be given inline as `= value`", c.name),
            ));
        }
    }
    if let Err(d) = crate::ingest::validate_schema(&fixture) {
        return Err(d.0.into_iter().next().expect("at least one diagnostic"));
    }
    p.expect_kw(Kw::Expect)?;
    let expect = if p.at_word("OK") {
        p.advance();
        Expectation::Ok
    } else if p.at_word("KO") {
        p.advance();
        let count = p.int()? as usize;
        let mut at = Vec::new();
        while p.at_word("AT") {
            p.advance();
            p.expect_sym(Sym::LParen)?;
            let mut tuple = Vec::new();
            loop {
                let (var, _) = p.ident()?;
                p.expect_sym(Sym::Eq)?;
                tuple.push((var, p.string()?));
                if p.eat_sym(Sym::RParen) {
                    break;
                }
                p.expect_sym(Sym::Comma)?;
            }
            at.push(tuple);
        }
        if at.len() > count {
            return p.error(format!("{} AT clauses for an expected count of {count}", at.len()));
        }
        Expectation::Ko { count, at }
    } else if p.at_word("ERROR") {
        p.advance();
        let span = p.span();
        let kind = p.string()?;
        let kind = WdKind::parse(&kind).ok_or_else(|| {
            let known: Vec<&str> = WdKind::ALL.iter().map(|k| k.as_str()).collect();
            Diagnostic::new(span, format!("unknown error kind `{kind}`; expected one of {}", known.join(", ")))
        })?;
        Expectation::Error(kind)
    } else {
        return p.unexpected("`OK`, `KO` or `ERROR`");
    };
    let end = p.expect_kw(Kw::End)?;
    Ok(Scenario {
        name,
        rule,
        rule_file,
        fixture,
        expect,
        span: start.join(&end),
    })
}
