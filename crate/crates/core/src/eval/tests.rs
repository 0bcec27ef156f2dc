use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::ingest::{Constant, Universe};
use crate::lang::{parse_expr, parse_predicate, typecheck_expr, typecheck_pred};

fn universe() -> Universe {
    let sig = |n: &str| Value::atom("t_signal", n);
    let ik = |n: &str| Value::atom("t_interlocking", n);
    let rel = Type::relation(Type::Given("t_signal".into()), Type::Given("t_interlocking".into()));
    Universe::new(
        BTreeMap::from([
            ("t_signal".into(), BTreeSet::from(["s1".into(), "s2".into(), "s3".into()])),
            ("t_interlocking".into(), BTreeSet::from(["ik1".into()])),
        ]),
        BTreeMap::from([
            (
                "territory".into(),
                Constant {
                    ty: rel.clone(),
                    value: Value::set([Value::pair(sig("s1"), ik("ik1")), Value::pair(sig("s2"), ik("ik1"))]),
                },
            ),
            (
                "linked".into(),
                Constant {
                    ty: rel,
                    value: Value::set([Value::pair(sig("s1"), ik("ik1"))]),
                },
            ),
        ]),
    )
    .unwrap()
}

fn both_expr(text: &str, env: &[(&str, Value)]) -> Outcome<Value> {
    let u = universe();
    let mut e = parse_expr(text).unwrap();
    let scope: Vec<(String, Type)> = env
        .iter()
        .map(|(n, v)| (n.to_string(), crate::kernel::type_of(v, &u.declarations()).unwrap()))
        .collect();
    typecheck_expr(&mut e, &u.declarations(), &scope).unwrap_or_else(|d| panic!("{text}: {d}"));
    let env = env.iter().fold(Env::new(), |acc, (n, v)| acc.with(n, v.clone()));
    let fast = eval_expr(&e, &env, &u);
    let slow = eval_naive_expr(&e, &env, &u);
    assert_eq!(fast.as_ref().map_err(|e| e.kind), slow.as_ref().map_err(|e| e.kind), "{text}");
    fast
}

fn both_pred(text: &str, env: &[(&str, Value)]) -> Outcome<bool> {
    let u = universe();
    let mut p = parse_predicate(text).unwrap();
    let scope: Vec<(String, Type)> = env
        .iter()
        .map(|(n, v)| (n.to_string(), crate::kernel::type_of(v, &u.declarations()).unwrap()))
        .collect();
    typecheck_pred(&mut p, &u.declarations(), &scope).unwrap_or_else(|d| panic!("{text}: {d}"));
    let env = env.iter().fold(Env::new(), |acc, (n, v)| acc.with(n, v.clone()));
    let fast = eval_pred(&p, &env, &u);
    let slow = eval_naive_pred(&p, &env, &u);
    assert_eq!(fast.as_ref().map_err(|e| e.kind), slow.as_ref().map_err(|e| e.kind), "{text}");
    fast
}

fn val(text: &str) -> String {
    both_expr(text, &[]).unwrap().to_string()
}

fn wd(text: &str) -> WdKind {
    both_expr(text, &[]).unwrap_err().kind
}

#[test]
fn relational_examples() {
    assert_eq!(val("dom({1|->2, 3|->4})"), "{1,3}");
    assert_eq!(val("{1|->2, 2|->3}[{1,2}]"), "{2,3}");
    assert_eq!(val("ran({1|->2, 3|->2})"), "{2}");
    assert_eq!(val("{1|->2, 3|->4}~"), "{2|->1,4|->3}");
    assert_eq!(val("{1} <| {1|->2, 3|->4}"), "{1|->2}");
    assert_eq!(val("{1} <<| {1|->2, 3|->4}"), "{3|->4}");
    assert_eq!(val("{1|->2, 3|->4} |> {4}"), "{3|->4}");
    assert_eq!(val("{1|->2, 3|->4} |>> {4}"), "{1|->2}");
    assert_eq!(val("({1|->2, 3|->4} ; {2|->5, 2|->6})"), "{1|->5,1|->6}");
    assert_eq!(val("{1,2} * {TRUE}"), "{1|->TRUE,2|->TRUE}");
    assert_eq!(val("{1,2,3} - {2}"), "{1,3}");
    assert_eq!(val("territory(s2)"), "ik1");
    assert_eq!(val("territory~[{ik1}]"), "{s1,s2}");
    assert_eq!(val("t_signal - dom(linked)"), "{s2,s3}");
}

#[test]
fn application_wd() {
    assert_eq!(wd("{1|->2, 1|->3}(1)"), WdKind::NonFunctionalApplication);
    assert_eq!(wd("{1|->2}(5)"), WdKind::ApplicationOutsideDomain);
    assert_eq!(wd("linked(s2)"), WdKind::ApplicationOutsideDomain);
}

#[test]
fn arithmetic() {
    assert_eq!(val("7 / 2"), "3");
    assert_eq!(val("(-7) / 2"), "-3");
    assert_eq!(val("-7 / 2"), "-3");
    assert_eq!(val("7 mod 3"), "1");
    assert_eq!(val("card((1..10) /\\ (5..20))"), "6");
    assert_eq!(val("5..4"), "{}");
    assert_eq!(val("min({3, -1, 2}) + max({3, -1, 2})"), "2");
    assert_eq!(wd("1 / 0"), WdKind::DivisionByZero);
    assert_eq!(wd("(-1) mod 2"), WdKind::ModOutOfDomain);
    assert_eq!(wd("1 mod 0"), WdKind::ModOutOfDomain);
    assert_eq!(wd("min({})"), WdKind::MinMaxOfEmptySet);
    assert_eq!(wd("9223372036854775807 + 1"), WdKind::ArithmeticOverflow);
    assert_eq!(wd("-9223372036854775807 - 2"), WdKind::ArithmeticOverflow);
    assert_eq!(wd("card(0..100000000)"), WdKind::UnboundedQuantification);
    assert_eq!(wd("card((1..5000) * (1..5000))"), WdKind::UnboundedQuantification);
}

#[test]
fn comprehension() {
    assert_eq!(val("{x | x : 1..5 & x mod 2 = 0}"), "{2,4}");
    assert_eq!(val("{x | x : {} & x > 1}"), "{}");
    assert_eq!(wd("{x | x : 1..3 & 1 / (x - 2) > 0}"), WdKind::DivisionByZero);
}

#[test]
fn predicates() {
    assert_eq!(both_pred("!(x).(x : 1..3 => x * x <= 9)", &[]), Ok(true));
    assert_eq!(both_pred("#(x).(x : 1..3 & x * x = 4)", &[]), Ok(true));
    assert_eq!(both_pred("{1|->2, 2|->2} : 1..2 --> 2..3", &[]), Ok(true));
    assert_eq!(both_pred("{1|->2, 2|->2} : 1..2 >-> 2..3", &[]), Ok(false));
    assert_eq!(both_pred("{1|->2, 2|->3} : 1..2 >->> 2..3", &[]), Ok(true));
    assert_eq!(both_pred("{1|->2} : 1..2 +-> 2..3", &[]), Ok(true));
    assert_eq!(both_pred("{1|->2} : 1..2 -->> 2..3", &[]), Ok(false));
    assert_eq!(both_pred("{1} <: {1, 2} & not({1, 3} <: {1, 2})", &[]), Ok(true));
}

#[test]
fn lazy_connectives() {
    let x0 = [("x", Value::Int(0))];
    assert_eq!(both_pred("x /= 0 & 1 / x < 2", &x0), Ok(false));
    assert_eq!(both_pred("x = 0 or 1 / x < 2", &x0), Ok(true));
    assert_eq!(both_pred("x /= 0 => 1 / x < 2", &x0), Ok(true));
    assert_eq!(both_pred("1 / x < 2 & x /= 0", &x0).unwrap_err().kind, WdKind::DivisionByZero);
    assert_eq!(both_pred("not (1 / x < 2)", &x0).unwrap_err().kind, WdKind::DivisionByZero);
    assert_eq!(both_pred("x = 0 <=> 1 / x < 2", &x0).unwrap_err().kind, WdKind::DivisionByZero);
}

#[test]
fn quantifier_short_circuit_and_errors() {
    // stops at x = 1 before reaching the undefined instance
    assert_eq!(both_pred("!(x).(x : 1..3 => x > 1 & 1 / (x - 2) > 0)", &[]), Ok(false));
    assert_eq!(
        both_pred("!(x).(x : 1..3 => 1 / (x - 2) > -5)", &[]).unwrap_err().kind,
        WdKind::DivisionByZero
    );
    assert_eq!(both_pred("#(x, y).(x : 1..3 & y : x..3 & x + y = 6)", &[]), Ok(true));
    assert_eq!(both_pred("!(x, y).(x : {} & y : 1..1 & x < y => 1 / 0 = 1)", &[]), Ok(true));
}

#[test]
fn linked_rule_predicate() {
    let s2 = [("sig", Value::atom("t_signal", "s2"))];
    let verify = "sig : dom(linked) & linked(sig) = territory(sig)";
    assert_eq!(both_pred(verify, &s2), Ok(false));
    let s1 = [("sig", Value::atom("t_signal", "s1"))];
    assert_eq!(both_pred(verify, &s1), Ok(true));
    assert_eq!(
        both_pred("linked(sig) = territory(sig)", &s2).unwrap_err().kind,
        WdKind::ApplicationOutsideDomain
    );
}

#[test]
fn trace_shows_skipped_operand() {
    let u = universe();
    let mut p = parse_predicate("sig : dom(linked) & linked(sig) = territory(sig)").unwrap();
    let scope = [("sig".to_string(), Type::Given("t_signal".into()))];
    typecheck_pred(&mut p, &u.declarations(), &scope).unwrap();
    let env = Env::new().with("sig", Value::atom("t_signal", "s2"));
    let (r, lines) = trace_pred(&p, &env, &u);
    assert_eq!(r, Ok(false));
    let text: Vec<String> = lines.iter().map(ToString::to_string).collect();
    assert!(text[0].ends_with("==>  FALSE"), "{text:?}");
    assert!(text.iter().any(|l| l.contains("dom(linked) = {s1}")), "{text:?}");
    assert!(text.last().unwrap().contains("not evaluated: linked(sig) = territory(sig)"), "{text:?}");
}
