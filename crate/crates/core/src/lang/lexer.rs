use std::sync::Arc;

use super::diag::{Diagnostic, Pos, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Kw(Kw),
    Int(u64),
    Str(String),
    Sym(Sym),
    /// Arrow syntax recognized only to reject it with a clear message.
    BadArrow(&'static str),
    Eof,
}

macro_rules! keywords {
    ($($name:ident = $text:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum Kw { $($name),* }

        impl Kw {
            pub fn text(self) -> &'static str {
                match self { $(Kw::$name => $text),* }
            }

            fn lookup(word: &str) -> Option<Kw> {
                match word { $($text => Some(Kw::$name),)* _ => None }
            }
        }
    };
}

keywords! {
    Rule = "RULE", Where = "WHERE", Verify = "VERIFY", Message = "MESSAGE", End = "END",
    Doc = "DOC", Class = "CLASS", Severity = "SEVERITY",
    Sets = "SETS", Constants = "CONSTANTS", From = "FROM", Cols = "COLS", Paths = "PATHS",
    Collect = "COLLECT", Scenario = "SCENARIO", Expect = "EXPECT",
    Pow = "POW", Integer = "INTEGER", BoolSet = "BOOL",
    True = "TRUE", False = "FALSE",
    Not = "not", Or = "or", Mod = "mod",
    Dom = "dom", Ran = "ran", Card = "card", Min = "min", Max = "max",
}

macro_rules! symbols {
    ($($name:ident = $text:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum Sym { $($name),* }

        impl Sym {
            pub fn text(self) -> &'static str {
                match self { $(Sym::$name => $text),* }
            }
        }

        /// Longest first, so maximal munch is a linear scan.
        const SYMBOLS: &[(&str, Sym)] = &[$(($text, Sym::$name)),*];
    };
}

symbols! {
    TBij = ">->>", TSurj = "-->>", DomSub = "<<|", Maplet = "|->", RanSub = "|>>",
    NotSubset = "/<:", Equiv = "<=>", PFun = "+->", TFun = "-->", TInj = ">->", Rel = "<->",
    DomRes = "<|", RanRes = "|>", Subset = "<:", Le = "<=", Ge = ">=", Implies = "=>",
    Neq = "/=", NotIn = "/:", Inter = "/\\", Union = "\\/", DotDot = "..",
    Lt = "<", Gt = ">", Eq = "=", Colon = ":", Plus = "+", Minus = "-", Star = "*",
    Slash = "/", Tilde = "~", Semi = ";", Bang = "!", Hash = "#", Dot = ".", Comma = ",",
    Bar = "|", Amp = "&", LParen = "(", RParen = ")", LBrace = "{", RBrace = "}",
    LBracket = "[", RBracket = "]",
}

const BAD_ARROWS: &[&str] = &[">+>>", "+->>", ">+>", "<<->>", "<<->", "<->>"];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    pos: Pos,
}

impl Cursor<'_> {
    fn rest(&self) -> &str {
        &self.src[self.offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }
}

/// Splits source text into tokens. `//` and `/* */` comments are skipped.
pub fn tokenize(file: &Arc<str>, src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        src,
        offset: 0,
        pos: Pos { line: 1, col: 1 },
    };
    let mut out = Vec::new();
    let span = |start: Pos, end: Pos| SourceSpan::new(file.clone(), start, end);

    loop {
        skip_trivia(&mut cur, file)?;
        let start = cur.pos;
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: span(start, start),
            });
            return Ok(out);
        };

        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let len = cur
                .rest()
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(cur.rest().len());
            let word = cur.rest()[..len].to_string();
            cur.bump_n(len);
            match Kw::lookup(&word) {
                Some(kw) => Tok::Kw(kw),
                None => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() {
            let len = cur
                .rest()
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(cur.rest().len());
            let digits = &cur.rest()[..len];
            let n: u64 = digits.parse().map_err(|_| {
                Diagnostic::new(span(start, cur.pos), format!("integer literal `{digits}` is too large"))
            })?;
            cur.bump_n(len);
            if cur.peek().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_') {
                return Err(Diagnostic::new(
                    span(start, cur.pos),
                    "identifiers must not start with a digit",
                ));
            }
            Tok::Int(n)
        } else if c == '"' {
            Tok::Str(lex_string(&mut cur, file)?)
        } else if let Some(bad) = BAD_ARROWS.iter().find(|b| cur.rest().starts_with(**b)) {
            cur.bump_n(bad.len());
            Tok::BadArrow(bad)
        } else if let Some((text, sym)) = SYMBOLS.iter().find(|(t, _)| cur.rest().starts_with(t)) {
            cur.bump_n(text.len());
            Tok::Sym(*sym)
        } else {
            cur.bump();
            return Err(Diagnostic::new(
                span(start, cur.pos),
                format!("unknown character `{c}`"),
            ));
        };
        out.push(Token {
            tok,
            span: span(start, cur.pos),
        });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>, file: &Arc<str>) -> Result<(), Diagnostic> {
    loop {
        let rest = cur.rest();
        if rest.starts_with("//") {
            while cur.peek().is_some_and(|c| c != '\n') {
                cur.bump();
            }
        } else if rest.starts_with("/*") {
            let start = cur.pos;
            cur.bump_n(2);
            loop {
                if cur.rest().starts_with("*/") {
                    cur.bump_n(2);
                    break;
                }
                if cur.bump().is_none() {
                    return Err(Diagnostic::new(
                        SourceSpan::new(file.clone(), start, cur.pos),
                        "unterminated block comment",
                    ));
                }
            }
        } else if cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        } else {
            return Ok(());
        }
    }
}

fn lex_string(cur: &mut Cursor<'_>, file: &Arc<str>) -> Result<String, Diagnostic> {
    let start = cur.pos;
    cur.bump();
    let mut out = String::new();
    loop {
        match cur.bump() {
            Some('"') => return Ok(out),
            Some('\\') => match cur.bump() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                other => {
                    return Err(Diagnostic::new(
                        SourceSpan::new(file.clone(), start, cur.pos),
                        format!("invalid escape `\\{}`", other.unwrap_or(' ')),
                    ))
                }
            },
            Some(c) => out.push(c),
            None => {
                return Err(Diagnostic::new(
                    SourceSpan::new(file.clone(), start, cur.pos),
                    "unterminated string literal",
                ))
            }
        }
    }
}
