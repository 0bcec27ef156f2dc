use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Element of a named carrier set.
///
/// Ordering is lexicographic on `(carrier, name)`, so identically named
/// elements of different carriers never compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    carrier: Arc<str>,
    name: Arc<str>,
}

impl Atom {
    pub fn new(carrier: impl Into<Arc<str>>, name: impl Into<Arc<str>>) -> Self {
        Atom {
            carrier: carrier.into(),
            name: name.into(),
        }
    }

    pub fn carrier(&self) -> &str {
        &self.carrier
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.carrier, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("integer {0} is outside the signed 64-bit range")]
pub struct IntRangeError(pub i128);

/// A value of the set-theoretic data model.
///
/// Sets are always held in canonical form: sorted by [`Ord`] and free of
/// duplicates. The derived ordering is the canonical order: variant order only
/// matters across kinds, which typechecked terms never compare.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Atom(Atom),
    Pair(Arc<(Value, Value)>),
    Set(SetV),
}

/// Canonically ordered, duplicate-free finite set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SetV(Arc<[Value]>);

impl SetV {
    pub fn empty() -> Self {
        SetV(Arc::from(Vec::new()))
    }

    /// Builds a set from arbitrary elements, sorting and deduplicating.
    pub fn from_unsorted(mut items: Vec<Value>) -> Self {
        for item in items.iter_mut() {
            *item = normalize(std::mem::replace(item, Value::Bool(false)));
        }
        items.sort_unstable();
        items.dedup();
        SetV(Arc::from(items))
    }

    /// Wraps elements already known to be sorted and distinct.
    ///
    /// Debug builds verify the claim.
    pub fn from_sorted(items: Vec<Value>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]), "unsorted set");
        SetV(Arc::from(items))
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.0.binary_search(v).is_ok()
    }

    fn is_canonical(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1]) && self.0.iter().all(is_normalized)
    }
}

impl fmt::Debug for SetV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl<'a> IntoIterator for &'a SetV {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl FromIterator<Value> for SetV {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        SetV::from_unsorted(iter.into_iter().collect())
    }
}

impl Value {
    /// Checked integer constructor; rejects anything outside `i64`.
    pub fn int(n: i128) -> Result<Value, IntRangeError> {
        i64::try_from(n).map(Value::Int).map_err(|_| IntRangeError(n))
    }

    pub fn atom(carrier: &str, name: &str) -> Value {
        Value::Atom(Atom::new(carrier, name))
    }

    pub fn pair(left: Value, right: Value) -> Value {
        Value::Pair(Arc::new((left, right)))
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Set(items.into_iter().collect())
    }

    pub fn empty_set() -> Value {
        Value::Set(SetV::empty())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&SetV> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Pair(p) => Some((&p.0, &p.1)),
            _ => None,
        }
    }

    /// Cardinality for sets, 1 for everything else.
    pub fn item_count(&self) -> usize {
        match self {
            Value::Set(s) => s.len(),
            _ => 1,
        }
    }
}

/// Puts a value into canonical form. Idempotent.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Pair(p) => {
            if is_normalized(&p.0) && is_normalized(&p.1) {
                Value::Pair(p)
            } else {
                let (l, r) = Arc::unwrap_or_clone(p);
                Value::pair(normalize(l), normalize(r))
            }
        }
        Value::Set(s) => {
            if s.is_canonical() {
                Value::Set(s)
            } else {
                Value::Set(SetV::from_unsorted(s.0.to_vec()))
            }
        }
        other => other,
    }
}

fn is_normalized(v: &Value) -> bool {
    match v {
        Value::Pair(p) => is_normalized(&p.0) && is_normalized(&p.1),
        Value::Set(s) => s.is_canonical(),
        _ => true,
    }
}

/// Structural equality on canonical forms.
pub fn value_eq(a: &Value, b: &Value) -> bool {
    a == b
}

/// Canonical-order comparison; total within a type.
pub fn canonical_cmp(a: &Value, b: &Value) -> Ordering {
    a.cmp(b)
}

impl fmt::Display for Value {
    /// Canonical text: atoms as bare names, maplets as `a|->b` with nested
    /// maplets parenthesized, sets braced in canonical order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Atom(a) => f.write_str(a.name()),
            Value::Pair(p) => {
                write_component(f, &p.0)?;
                f.write_str("|->")?;
                write_component(f, &p.1)
            }
            Value::Set(s) => {
                f.write_str("{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

fn write_component(f: &mut fmt::Formatter<'_>, v: &Value) -> fmt::Result {
    if matches!(v, Value::Pair(_)) {
        write!(f, "({v})")
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_set(items: Vec<Value>) -> Value {
        Value::Set(SetV(Arc::from(items)))
    }

    #[test]
    fn normalize_dedups_and_sorts() {
        let v = raw_set(vec![Value::Int(1), Value::Int(2), Value::Int(2)]);
        assert_eq!(normalize(v), Value::set([Value::Int(1), Value::Int(2)]));

        let nested = raw_set(vec![
            raw_set(vec![Value::Int(2)]),
            raw_set(vec![Value::Int(1)]),
        ]);
        let n = normalize(nested);
        assert_eq!(n.to_string(), "{{1},{2}}");

        let p = Value::pair(Value::Int(1), Value::Int(2));
        assert_eq!(normalize(p.clone()), p);
    }

    #[test]
    fn normalize_reaches_inside_pairs() {
        let p = Value::pair(raw_set(vec![Value::Int(3), Value::Int(1), Value::Int(3)]), Value::Int(0));
        assert_eq!(normalize(p).to_string(), "{1,3}|->0");
    }

    #[test]
    fn equality_is_extensional() {
        let a = Value::set([Value::Int(1), Value::Int(2)]);
        let b = Value::set([Value::Int(2), Value::Int(1)]);
        assert!(value_eq(&a, &b));
        assert!(value_eq(&Value::empty_set(), &Value::empty_set()));

        let left = Value::pair(Value::pair(Value::Int(1), Value::Int(2)), Value::Int(3));
        let right = Value::pair(Value::Int(1), Value::pair(Value::Int(2), Value::Int(3)));
        assert!(!value_eq(&left, &right));
        assert_eq!(left.to_string(), "(1|->2)|->3");
        assert_eq!(right.to_string(), "1|->(2|->3)");
    }

    #[test]
    fn canonical_order_details() {
        assert!(Value::Bool(false) < Value::Bool(true));
        assert!(Value::Int(-3) < Value::Int(2));
        assert!(Value::atom("a", "z") < Value::atom("b", "a"));
        assert!(Value::atom("a", "x") < Value::atom("a", "y"));
        // shorter prefix first
        let short = Value::set([Value::Int(1)]);
        let long = Value::set([Value::Int(1), Value::Int(2)]);
        assert!(short < long);
        assert!(Value::set([Value::Int(1), Value::Int(5)]) < Value::set([Value::Int(2)]));
        assert!(Value::empty_set() < short);
    }

    #[test]
    fn same_name_atoms_of_distinct_carriers_differ() {
        assert_ne!(Value::atom("t_a", "x"), Value::atom("t_b", "x"));
    }

    #[test]
    fn int_constructor_is_checked() {
        assert_eq!(Value::int(5), Ok(Value::Int(5)));
        assert!(Value::int(i64::MAX as i128 + 1).is_err());
        assert!(Value::int(i64::MIN as i128 - 1).is_err());
        assert_eq!(Value::int(i64::MIN as i128), Ok(Value::Int(i64::MIN)));
    }
}
