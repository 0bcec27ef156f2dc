//! Seeded generators for universes, terms and rules.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use bdv::ingest::{Constant, Universe};
use bdv::kernel::{Type, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CA: &str = "ca";
pub const CB: &str = "cb";

/// Shape of a random universe; the generator needs it to name atoms.
#[derive(Debug, Clone)]
pub struct Shape {
    pub a: usize,
    pub b: usize,
}

fn atoms(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn ga() -> Type {
    Type::Given(CA.into())
}

fn gb() -> Type {
    Type::Given(CB.into())
}

/// Random relation between the listed atoms with at most `max` pairs.
pub fn random_pairs(rng: &mut ChaCha8Rng, left: &[Value], right: &[Value], max: usize) -> Value {
    let n = rng.gen_range(0..=max);
    Value::set((0..n).map(|_| {
        Value::pair(
            left.choose(rng).expect("non-empty").clone(),
            right.choose(rng).expect("non-empty").clone(),
        )
    }))
}

fn random_subset(rng: &mut ChaCha8Rng, items: &[Value]) -> Value {
    Value::set(items.iter().filter(|_| rng.gen_bool(0.5)).cloned())
}

fn small_int(rng: &mut ChaCha8Rng) -> Value {
    Value::Int(rng.gen_range(-8..=8))
}

/// Carriers `ca` (a0..) and `cb` (b0..) of 1 to 6 atoms each, and
/// `r, s : ca <-> cb`, `g : cb <-> cb`, `f : ca +-> INTEGER`, `n : INTEGER`,
/// `S, T : POW(ca)`, `q : POW(INTEGER)`, `flag : BOOL`.
pub fn random_universe(rng: &mut ChaCha8Rng) -> (Universe, Shape) {
    let shape = Shape {
        a: rng.gen_range(1..=6),
        b: rng.gen_range(1..=6),
    };
    let a: Vec<Value> = atoms("a", shape.a).iter().map(|n| Value::atom(CA, n)).collect();
    let b: Vec<Value> = atoms("b", shape.b).iter().map(|n| Value::atom(CB, n)).collect();
    let ints: Vec<Value> = (-8..=8).map(Value::Int).collect();
    let mut f = BTreeMap::new();
    for x in &a {
        if rng.gen_bool(0.7) {
            f.insert(x.clone(), small_int(rng));
        }
    }
    let rel = Type::relation(ga(), gb());
    let mut constants = BTreeMap::new();
    let mut put = |name: &str, ty: Type, value: Value| {
        constants.insert(name.to_string(), Constant { ty, value });
    };
    put("r", rel.clone(), random_pairs(rng, &a, &b, 12));
    put("s", rel, random_pairs(rng, &a, &b, 12));
    put("g", Type::relation(gb(), gb()), random_pairs(rng, &b, &b, 12));
    put(
        "f",
        Type::relation(ga(), Type::Integer),
        Value::set(f.into_iter().map(|(k, v)| Value::pair(k, v))),
    );
    put("n", Type::Integer, small_int(rng));
    put("S", Type::power(ga()), random_subset(rng, &a));
    put("T", Type::power(ga()), random_subset(rng, &a));
    let qn = rng.gen_range(0..=5);
    put(
        "q",
        Type::power(Type::Integer),
        Value::set((0..qn).map(|_| ints.choose(rng).expect("ints").clone())),
    );
    put("flag", Type::Bool, Value::Bool(rng.gen_bool(0.5)));
    let carriers = BTreeMap::from([
        (CA.to_string(), atoms("a", shape.a).into_iter().collect::<BTreeSet<_>>()),
        (CB.to_string(), atoms("b", shape.b).into_iter().collect::<BTreeSet<_>>()),
    ]);
    (Universe::new(carriers, constants).expect("generated universe is consistent"), shape)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    A,
    B,
}

/// Emits fully parenthesized source text for well-typed terms.
pub struct TermGen<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub shape: Shape,
    scope: Vec<(String, Kind)>,
    fresh: usize,
}

impl<'r> TermGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng, shape: Shape) -> Self {
        TermGen {
            rng,
            shape,
            scope: Vec::new(),
            fresh: 0,
        }
    }

    /// Variables already bound by the caller (rule bindings).
    pub fn with_scope(mut self, vars: &[(&str, Kind)]) -> Self {
        self.scope = vars.iter().map(|(n, k)| (n.to_string(), *k)).collect();
        self
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty choice")
    }

    fn var_of(&mut self, kind: Kind) -> Option<String> {
        let vars: Vec<String> = self.scope.iter().filter(|(_, k)| *k == kind).map(|(n, _)| n.clone()).collect();
        vars.choose(self.rng).cloned()
    }

    fn fresh_var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    pub fn int(&mut self, d: u32) -> String {
        if let Some(v) = self.var_of(Kind::Int) {
            if self.rng.gen_bool(0.3) {
                return v;
            }
        }
        if d == 0 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..4) {
                0 => "n".into(),
                1 => "card(S)".into(),
                _ => self.rng.gen_range(-8..=8).to_string(),
            };
        }
        match self.rng.gen_range(0..9) {
            0..=2 => {
                let op = self.pick(&["+", "-", "*", "/", "mod"]);
                format!("({} {op} {})", self.int(d - 1), self.int(d - 1))
            }
            3 => format!("(-{})", self.int(d - 1)),
            4 => {
                let k = self.pick(&[Kind::Int, Kind::A, Kind::B]);
                format!("card({})", self.set(k, d - 1))
            }
            5 => format!("min({})", self.set(Kind::Int, d - 1)),
            6 => format!("max({})", self.set(Kind::Int, d - 1)),
            7 => format!("f({})", self.elem(Kind::A, d - 1)),
            _ => format!("card({})", self.rel(d - 1)),
        }
    }

    pub fn elem(&mut self, kind: Kind, d: u32) -> String {
        if kind == Kind::Int {
            return self.int(d);
        }
        if let Some(v) = self.var_of(kind) {
            if self.rng.gen_bool(0.5) {
                return v;
            }
        }
        let atom = |g: &mut Self, k: Kind| {
            let (p, n) = if k == Kind::A { ("a", g.shape.a) } else { ("b", g.shape.b) };
            format!("{p}{}", g.rng.gen_range(0..n))
        };
        if d == 0 || self.rng.gen_bool(0.5) {
            return atom(self, kind);
        }
        match (kind, self.rng.gen_range(0..3)) {
            (Kind::A, 0) => format!("(r~)({})", self.elem(Kind::B, d - 1)),
            (Kind::B, 0) => format!("r({})", self.elem(Kind::A, d - 1)),
            (Kind::B, 1) => format!("g({})", self.elem(Kind::B, d - 1)),
            _ => atom(self, kind),
        }
    }

    pub fn set(&mut self, kind: Kind, d: u32) -> String {
        if d == 0 || self.rng.gen_bool(0.2) {
            return match kind {
                Kind::Int => match self.rng.gen_range(0..3) {
                    0 => "q".into(),
                    1 => "ran(f)".into(),
                    _ => {
                        let lo = self.rng.gen_range(-4..=3);
                        format!("({lo}..{})", lo + self.rng.gen_range(-1..=4))
                    }
                },
                Kind::A => self.pick(&["S", "T", "ca", "dom(r)", "dom(f)"]).into(),
                Kind::B => self.pick(&["cb", "ran(r)", "ran(g)", "dom(g)"]).into(),
            };
        }
        match self.rng.gen_range(0..7) {
            0 | 1 => {
                let op = self.pick(&["\\/", "/\\", "-"]);
                format!("({} {op} {})", self.set(kind, d - 1), self.set(kind, d - 1))
            }
            2 => {
                let n = self.rng.gen_range(1..=3);
                let items: Vec<String> = (0..n).map(|_| self.elem(kind, d - 1)).collect();
                format!("{{{}}}", items.join(", "))
            }
            3 => match kind {
                Kind::Int => format!("f[{}]", self.set(Kind::A, d - 1)),
                Kind::A => format!("(r~)[{}]", self.set(Kind::B, d - 1)),
                Kind::B => format!("{}[{}]", self.rel(d - 1), self.set(Kind::A, d - 1)),
            },
            4 => {
                let v = self.fresh_var();
                let dom = self.set(kind, d - 1);
                self.scope.push((v.clone(), kind));
                let body = self.pred(d - 1);
                self.scope.pop();
                format!("{{{v} | {v} : {dom} & ({body})}}")
            }
            5 => match kind {
                Kind::Int => format!("({}..{})", self.int(d - 1), self.int(d - 1)),
                Kind::A => format!("dom({})", self.rel(d - 1)),
                Kind::B => format!("ran({})", self.rel(d - 1)),
            },
            _ => match kind {
                Kind::A => self.pick(&["S", "T", "ca"]).into(),
                _ => self.set(kind, d - 1),
            },
        }
    }

    /// A relation of type `ca <-> cb`.
    pub fn rel(&mut self, d: u32) -> String {
        if d == 0 || self.rng.gen_bool(0.25) {
            return self.pick(&["r", "s"]).into();
        }
        match self.rng.gen_range(0..9) {
            0 => format!("({} <| {})", self.set(Kind::A, d - 1), self.rel(d - 1)),
            1 => format!("({} |> {})", self.rel(d - 1), self.set(Kind::B, d - 1)),
            2 => format!("({} <<| {})", self.set(Kind::A, d - 1), self.rel(d - 1)),
            3 => format!("({} |>> {})", self.rel(d - 1), self.set(Kind::B, d - 1)),
            4 => {
                let op = self.pick(&["\\/", "/\\", "-"]);
                format!("({} {op} {})", self.rel(d - 1), self.rel(d - 1))
            }
            5 => format!("(({})~)~", self.rel(d - 1)),
            6 => format!("({} * {})", self.set(Kind::A, d - 1), self.set(Kind::B, d - 1)),
            7 => format!("({} ; g)", self.rel(d - 1)),
            _ => {
                let n = self.rng.gen_range(1..=3);
                let items: Vec<String> = (0..n)
                    .map(|_| format!("{} |-> {}", self.elem(Kind::A, d - 1), self.elem(Kind::B, d - 1)))
                    .collect();
                format!("{{{}}}", items.join(", "))
            }
        }
    }

    pub fn pred(&mut self, d: u32) -> String {
        if d == 0 || self.rng.gen_bool(0.15) {
            let cmp = self.pick(&["=", "/=", "<", "<=", ">", ">="]);
            return match self.rng.gen_range(0..3) {
                0 => format!("{} {cmp} {}", self.int(0), self.int(0)),
                1 => {
                    let k = self.pick(&[Kind::A, Kind::B]);
                    format!("{} : {}", self.elem(k, 0), self.set(k, 0))
                }
                _ => self.pick(&["flag = TRUE", "flag /= FALSE", "TRUE : BOOL"]).into(),
            };
        }
        let d1 = d - 1;
        match self.rng.gen_range(0..16) {
            0 => format!("not({})", self.pred(d1)),
            1 | 2 => {
                let op = self.pick(&["&", "or", "=>", "<=>"]);
                format!("({}) {op} ({})", self.pred(d1), self.pred(d1))
            }
            3 | 4 => {
                let cmp = self.pick(&["=", "/=", "<", "<=", ">", ">="]);
                format!("{} {cmp} {}", self.int(d1), self.int(d1))
            }
            5 | 6 => {
                let k = self.pick(&[Kind::Int, Kind::A, Kind::B]);
                let op = self.pick(&[":", "/:"]);
                format!("{} {op} {}", self.elem(k, d1), self.set(k, d1))
            }
            7 => {
                let k = self.pick(&[Kind::Int, Kind::A, Kind::B]);
                let op = self.pick(&["<:", "/<:", "=", "/="]);
                format!("{} {op} {}", self.set(k, d1), self.set(k, d1))
            }
            8 => {
                let op = self.pick(&["=", "<:", "/="]);
                format!("{} {op} {}", self.rel(d1), self.rel(d1))
            }
            9 | 10 => self.quantifier(d1, true),
            11 | 12 => self.quantifier(d1, false),
            13 => {
                let arrow = self.pick(&["+->", "-->", ">->", "-->>", ">->>"]);
                format!("{} : {} {arrow} {}", self.rel(d1), self.set(Kind::A, d1), self.set(Kind::B, d1))
            }
            14 => {
                let arrow = self.pick(&["+->", "-->"]);
                format!("f : {} {arrow} {}", self.set(Kind::A, d1), self.set(Kind::Int, d1))
            }
            _ => {
                let v = self.elem(Kind::A, d1);
                format!("({v} : dom(f)) => (f({v}) {} {})", self.pick(&["<", ">="]), self.int(d1))
            }
        }
    }

    fn quantifier(&mut self, d: u32, universal: bool) -> String {
        let n = if self.rng.gen_bool(0.7) { 1 } else { 2 };
        let mut vars = Vec::new();
        let mut guards = Vec::new();
        for _ in 0..n {
            let k = self.pick(&[Kind::Int, Kind::A, Kind::B]);
            let v = self.fresh_var();
            let dom = match k {
                Kind::Int => {
                    let lo = self.rng.gen_range(-3..=2);
                    format!("{lo}..{}", lo + self.rng.gen_range(0..=4))
                }
                _ => self.set(k, d.min(1)),
            };
            guards.push(format!("{v} : {dom}"));
            self.scope.push((v.clone(), k));
            vars.push(v);
        }
        let body = self.pred(d);
        for _ in 0..n {
            self.scope.pop();
        }
        let vars = if n == 1 { vars[0].clone() } else { format!("({})", vars.join(", ")) };
        let guards = guards.join(" & ");
        if universal {
            format!("!{vars}.({guards} => ({body}))")
        } else {
            format!("#{vars}.({guards} & ({body}))")
        }
    }

    /// An expression of a randomly chosen type.
    pub fn any_expr(&mut self, d: u32) -> String {
        match self.rng.gen_range(0..6) {
            0 | 1 => self.int(d),
            2 => self.set(Kind::A, d),
            3 => self.set(Kind::Int, d),
            4 => self.set(Kind::B, d),
            _ => self.rel(d),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rule source with one or two bindings, an optional filter and a verify
/// predicate over them.
pub fn random_rule(rng: &mut ChaCha8Rng, shape: &Shape, name: &str) -> String {
    let kx = *[Kind::Int, Kind::A, Kind::B].choose(rng).expect("kinds");
    let dom_x = match kx {
        Kind::Int => {
            let lo = rng.gen_range(-4..=2);
            format!("{lo}..{}", lo + rng.gen_range(0..=5))
        }
        k => TermGen::new(rng, shape.clone()).set(k, 2),
    };
    let mut vars = vec![("x", kx)];
    let mut where_ = vec![format!("x : {dom_x}")];
    if rng.gen_bool(0.5) {
        let ky = *[Kind::A, Kind::B].choose(rng).expect("kinds");
        let dom_y = if kx == Kind::A && ky == Kind::B && rng.gen_bool(0.5) {
            "r[{x}]".to_string()
        } else {
            TermGen::new(rng, shape.clone()).with_scope(&vars).set(ky, 1)
        };
        where_.push(format!("y : {dom_y}"));
        vars.push(("y", ky));
    }
    if rng.gen_bool(0.4) {
        let filter = TermGen::new(rng, shape.clone()).with_scope(&vars).pred(1);
        where_.push(format!("x = x & ({filter})"));
    }
    let verify = TermGen::new(rng, shape.clone()).with_scope(&vars).pred(3);
    let msg: Vec<String> = vars.iter().map(|(v, _)| format!("{v}=${{{v}}}")).collect();
    format!(
        "RULE {name}\nWHERE {}\nVERIFY {verify}\nMESSAGE \"{}\"\nEND\n",
        where_.join(" & "),
        msg.join(" ")
    )
}
