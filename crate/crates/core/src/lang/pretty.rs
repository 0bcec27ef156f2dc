use std::fmt::Write;

use super::ast::*;

/// Canonical source text of an expression, minimally parenthesized.
pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

pub fn pred_to_string(p: &Pred) -> String {
    let mut out = String::new();
    write_pred(&mut out, p, pred_prec::EQUIV);
    out
}

pub fn rule_to_string(r: &Rule) -> String {
    let mut out = format!("RULE {}\n", r.name);
    if !r.doc.is_empty() {
        let _ = writeln!(out, "  DOC {}", quote(&r.doc));
    }
    if r.error_class != r.name {
        let _ = writeln!(out, "  CLASS {}", r.error_class);
    }
    if r.severity == Severity::Warning {
        out.push_str("  SEVERITY WARNING\n");
    }
    if !r.bindings.is_empty() || !r.filters.is_empty() {
        out.push_str("WHERE\n");
        let mut parts: Vec<String> = r
            .bindings
            .iter()
            .map(|b| format!("{} : {}", b.var, expr_to_string(&b.domain)))
            .collect();
        for f in &r.filters {
            let mut s = String::new();
            write_pred(&mut s, f, pred_prec::AND + 1);
            parts.push(s);
        }
        let _ = writeln!(out, "  {}", parts.join(" &\n  "));
    }
    let _ = writeln!(out, "VERIFY\n  {}", pred_to_string(&r.verify));
    let _ = writeln!(out, "MESSAGE {}\nEND", quote(&r.message));
    out
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Bin(op, ..) => op.precedence(),
        ExprKind::Neg(_) => PREFIX_PREC,
        ExprKind::Int(n) if *n < 0 => PREFIX_PREC,
        ExprKind::Inverse(_) | ExprKind::Image(..) | ExprKind::Apply(..) => POSTFIX_PREC,
        _ => u8::MAX,
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    if expr_prec(e) < min {
        out.push('(');
        write_expr(out, e, 0);
        out.push(')');
        return;
    }
    match &e.kind {
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Bool(true) => out.push_str("TRUE"),
        ExprKind::Bool(false) => out.push_str("FALSE"),
        ExprKind::BoolSet => out.push_str("BOOL"),
        ExprKind::SetExt(items) => {
            out.push('{');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item, 0);
            }
            out.push('}');
        }
        ExprKind::Compr { var, body } => {
            let _ = write!(out, "{{{var} | ");
            write_pred(out, body, pred_prec::EQUIV);
            out.push('}');
        }
        ExprKind::Neg(inner) => {
            out.push('-');
            if let ExprKind::Ident(n) = &inner.kind {
                out.push_str(n);
            } else {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            }
        }
        ExprKind::Bin(op, a, b) => {
            let p = op.precedence();
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.text());
            write_expr(out, b, p + 1);
        }
        ExprKind::Builtin(f, a) => {
            let _ = write!(out, "{}(", f.text());
            write_expr(out, a, 0);
            out.push(')');
        }
        ExprKind::Inverse(a) => {
            write_expr(out, a, POSTFIX_PREC);
            out.push('~');
        }
        ExprKind::Image(a, b) => {
            write_expr(out, a, POSTFIX_PREC);
            out.push('[');
            write_expr(out, b, 0);
            out.push(']');
        }
        ExprKind::Apply(a, b) => {
            write_expr(out, a, POSTFIX_PREC);
            out.push('(');
            write_expr(out, b, 0);
            out.push(')');
        }
    }
}

fn pred_level(p: &Pred) -> u8 {
    match &p.kind {
        PredKind::Equiv(..) => pred_prec::EQUIV,
        PredKind::Implies(..) => pred_prec::IMPLIES,
        PredKind::Or(..) => pred_prec::OR,
        PredKind::And(..) => pred_prec::AND,
        PredKind::Not(_) => pred_prec::NOT,
        _ => pred_prec::ATOM,
    }
}

fn write_pred(out: &mut String, p: &Pred, min: u8) {
    if pred_level(p) < min {
        out.push('(');
        write_pred(out, p, pred_prec::EQUIV);
        out.push(')');
        return;
    }
    match &p.kind {
        PredKind::Equiv(a, b) => write_binary(out, a, "<=>", b, pred_prec::EQUIV, true),
        PredKind::Implies(a, b) => write_binary(out, a, "=>", b, pred_prec::IMPLIES, false),
        PredKind::Or(a, b) => write_binary(out, a, "or", b, pred_prec::OR, false),
        PredKind::And(a, b) => write_binary(out, a, "&", b, pred_prec::AND, false),
        PredKind::Not(a) => {
            out.push_str("not ");
            write_pred(out, a, pred_prec::NOT);
        }
        PredKind::ForAll(vars, body) | PredKind::Exists(vars, body) => {
            out.push(if matches!(p.kind, PredKind::ForAll(..)) { '!' } else { '#' });
            let _ = write!(out, "({}).(", vars.join(", "));
            write_pred(out, body, pred_prec::EQUIV);
            out.push(')');
        }
        PredKind::Cmp(op, a, b) => {
            write_expr(out, a, 0);
            let _ = write!(out, " {} ", op.text());
            write_expr(out, b, 0);
        }
        PredKind::Arrow {
            func,
            arrow,
            dom,
            ran,
        } => {
            write_expr(out, func, 0);
            out.push_str(" : ");
            write_expr(out, dom, 0);
            let _ = write!(out, " {} ", arrow.text());
            write_expr(out, ran, 0);
        }
    }
}

fn write_binary(out: &mut String, a: &Pred, op: &str, b: &Pred, prec: u8, right_assoc: bool) {
    let (lmin, rmin) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
    write_pred(out, a, lmin);
    let _ = write!(out, " {op} ");
    write_pred(out, b, rmin);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_expr, parse_predicate, parse_rule_file};

    fn rt_expr(text: &str) -> String {
        let e = parse_expr(text).unwrap();
        let printed = expr_to_string(&e);
        assert_eq!(parse_expr(&printed).unwrap(), e, "{printed}");
        printed
    }

    fn rt_pred(text: &str) -> String {
        let p = parse_predicate(text).unwrap();
        let printed = pred_to_string(&p);
        assert_eq!(parse_predicate(&printed).unwrap(), p, "{printed}");
        printed
    }

    #[test]
    fn examples() {
        assert_eq!(rt_expr("1+2*3"), "1 + 2 * 3");
        assert_eq!(rt_pred("a = 1 & (b = 1 or c = 1)"), "a = 1 & (b = 1 or c = 1)");
        assert_eq!(rt_expr("{ }"), "{}");
    }

    #[test]
    fn parenthesization_keeps_tree() {
        assert_eq!(rt_expr("(1+2)*3"), "(1 + 2) * 3");
        assert_eq!(rt_expr("1-(2-3)"), "1 - (2 - 3)");
        assert_eq!(rt_expr("(-3)~"), "(-3)~");
        assert_eq!(rt_expr("-(3)"), "-(3)");
        assert_eq!(rt_expr("-(-x)"), "-(-x)");
        assert_eq!(rt_expr("(a |-> b) |-> c"), "a |-> b |-> c");
        assert_eq!(rt_expr("a |-> (b |-> c)"), "a |-> (b |-> c)");
        assert_eq!(rt_expr("(r ; s)[{1}]"), "(r ; s)[{1}]");
        assert_eq!(rt_pred("(a = 1 => b = 1) => c = 1"), "a = 1 => b = 1 => c = 1");
        assert_eq!(rt_pred("a = 1 => (b = 1 => c = 1)"), "a = 1 => (b = 1 => c = 1)");
        assert_eq!(rt_pred("(a = 1 <=> b = 1) <=> c = 1"), "(a = 1 <=> b = 1) <=> c = 1");
        assert_eq!(rt_pred("not not a = 1"), "not not a = 1");
        assert_eq!(rt_pred("not (a = 1 or b = 1)"), "not (a = 1 or b = 1)");
        rt_pred("!(x, y).(x : S & y : T => x |-> y : r)");
        rt_pred("f : dom(g) >->> ran(g)~[{1}]");
        rt_expr("{x | x : 1..5 & (x mod 2 = 0 or x = 1)}");
    }

    #[test]
    fn rules_round_trip() {
        let text = r#"
            RULE r2 DOC "say \"hi\"" CLASS linkage SEVERITY WARNING
            WHERE a : S & b : T & (a /= b or a = b)
            VERIFY a = b
            MESSAGE "${a} and ${b}"
            END
            RULE r3 VERIFY 1 = 1 MESSAGE "" END"#;
        let rules = parse_rule_file("", text).unwrap();
        let printed: String = rules.iter().map(rule_to_string).collect::<Vec<_>>().join("\n");
        assert_eq!(parse_rule_file("", &printed).unwrap(), rules);
    }
}
