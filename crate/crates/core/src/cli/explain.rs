use std::fmt::Write as _;

use crate::eval::{eval_expr, trace_pred, Env};
use crate::ingest::Universe;
use crate::lang::{
    binding_types, expr_to_string, free_idents, Expr, ExprKind, Pred, PredKind, TypedRule,
};
use crate::rules::{run_rule_witness, Status};

fn ty(e: &Expr) -> String {
    e.ty.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "?".into())
}

fn expr_tree(e: &Expr, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let head = match &e.kind {
        ExprKind::Ident(n) => format!("ident {n}"),
        ExprKind::Int(i) => format!("int {i}"),
        ExprKind::Bool(b) => format!("bool {}", if *b { "TRUE" } else { "FALSE" }),
        ExprKind::BoolSet => "BOOL".into(),
        ExprKind::SetExt(items) if items.is_empty() => "empty set".into(),
        ExprKind::SetExt(_) => "set extension".into(),
        ExprKind::Compr { var, .. } => format!("comprehension over {var}"),
        ExprKind::Neg(_) => "negation".into(),
        ExprKind::Bin(op, ..) => format!("`{}`", op.text()),
        ExprKind::Builtin(b, _) => b.text().to_string(),
        ExprKind::Inverse(_) => "inverse".into(),
        ExprKind::Image(..) => "image".into(),
        ExprKind::Apply(..) => "application".into(),
    };
    let _ = writeln!(out, "{pad}{head} : {}", ty(e));
    match &e.kind {
        ExprKind::SetExt(items) => items.iter().for_each(|i| expr_tree(i, depth + 1, out)),
        ExprKind::Compr { body, .. } => pred_tree(body, depth + 1, out),
        ExprKind::Neg(a) | ExprKind::Builtin(_, a) | ExprKind::Inverse(a) => expr_tree(a, depth + 1, out),
        ExprKind::Bin(_, a, b) | ExprKind::Image(a, b) | ExprKind::Apply(a, b) => {
            expr_tree(a, depth + 1, out);
            expr_tree(b, depth + 1, out);
        }
        ExprKind::Ident(_) | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::BoolSet => {}
    }
}

fn pred_tree(p: &Pred, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match &p.kind {
        PredKind::And(a, b) | PredKind::Or(a, b) | PredKind::Implies(a, b) | PredKind::Equiv(a, b) => {
            let op = match &p.kind {
                PredKind::And(..) => "&",
                PredKind::Or(..) => "or",
                PredKind::Implies(..) => "=>",
                _ => "<=>",
            };
            let _ = writeln!(out, "{pad}`{op}`");
            pred_tree(a, depth + 1, out);
            pred_tree(b, depth + 1, out);
        }
        PredKind::Not(a) => {
            let _ = writeln!(out, "{pad}not");
            pred_tree(a, depth + 1, out);
        }
        PredKind::ForAll(vars, body) | PredKind::Exists(vars, body) => {
            let q = if matches!(p.kind, PredKind::ForAll(..)) { "for all" } else { "exists" };
            let _ = writeln!(out, "{pad}{q} {}", vars.join(", "));
            pred_tree(body, depth + 1, out);
        }
        PredKind::Cmp(op, a, b) => {
            let _ = writeln!(out, "{pad}`{}`", op.text());
            expr_tree(a, depth + 1, out);
            expr_tree(b, depth + 1, out);
        }
        PredKind::Arrow { func, arrow, dom, ran } => {
            let _ = writeln!(out, "{pad}`: {}`", arrow.text());
            expr_tree(func, depth + 1, out);
            expr_tree(dom, depth + 1, out);
            expr_tree(ran, depth + 1, out);
        }
    }
}

/// Typed AST and binding types of a rule.
pub fn describe_rule(rule: &TypedRule) -> String {
    let mut out = format!("rule {} ({})\n", rule.name, rule.span);
    if !rule.doc.is_empty() {
        let _ = writeln!(out, "  {}", rule.doc);
    }
    out.push_str("bindings:\n");
    if rule.bindings.is_empty() {
        out.push_str("  (none)\n");
    }
    for ((var, t), b) in binding_types(rule).iter().zip(&rule.bindings) {
        let _ = writeln!(out, "  {var} : {t}    from {}", expr_to_string(&b.domain));
        expr_tree(&b.domain, 2, &mut out);
    }
    for (i, f) in rule.filters.iter().enumerate() {
        let _ = writeln!(out, "filter {}:", i + 1);
        pred_tree(f, 1, &mut out);
    }
    out.push_str("verify:\n");
    pred_tree(&rule.verify, 1, &mut out);
    out
}

/// Binding domain sizes, the verdict, and a trace of the first
/// counterexample (or of the tuple that hit an undefined term).
pub fn explain_on(rule: &TypedRule, u: &Universe) -> String {
    let mut out = String::from("domains:\n");
    let earlier: Vec<&str> = rule.bindings.iter().map(|b| b.var.as_str()).collect();
    for (i, b) in rule.bindings.iter().enumerate() {
        let mut free = Vec::new();
        free_idents(&b.domain, &mut free);
        if free.iter().any(|n| earlier[..i].contains(&n.as_str())) {
            let _ = writeln!(out, "  {} : depends on earlier bindings", b.var);
            continue;
        }
        match eval_expr(&b.domain, &Env::new(), u) {
            Ok(v) => {
                let n = v.as_set().map(|s| s.len()).unwrap_or(0);
                let _ = writeln!(out, "  {} : {n} candidates", b.var);
            }
            Err(e) => {
                let _ = writeln!(out, "  {} : domain undefined ({}: {})", b.var, e.kind, e.detail);
            }
        }
    }
    let (result, witness) = run_rule_witness(rule, u);
    let _ = writeln!(out, "{} tuples selected", result.selected);
    match result.status {
        Status::Ok => {
            let _ = writeln!(out, "result: OK");
        }
        Status::Ko => {
            let _ = writeln!(out, "result: KO with {} counterexamples", result.counterexamples.len());
        }
        Status::Error => {
            let e = result.error.as_ref().expect("ERROR status carries an error");
            let _ = writeln!(out, "result: ERROR {} at {}: {}", e.kind, e.span, e.detail);
        }
    }
    if let Some(env) = witness {
        let shown: Vec<String> = env.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        let title = if result.status == Status::Ko {
            "first counterexample"
        } else {
            "failing tuple"
        };
        let _ = writeln!(out, "trace of {title}: {}", shown.join(", "));
        for (i, f) in rule.filters.iter().enumerate() {
            let _ = writeln!(out, "filter {}:", i + 1);
            push_trace(f, &env, u, &mut out);
        }
        out.push_str("verify:\n");
        push_trace(&rule.verify, &env, u, &mut out);
    }
    out
}

fn push_trace(p: &Pred, env: &Env, u: &Universe, out: &mut String) {
    let (_, lines) = trace_pred(p, env, u);
    for l in lines {
        let _ = writeln!(out, "  {l}");
    }
}
