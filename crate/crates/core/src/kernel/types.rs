use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::value::Value;

/// Static type of a value.
///
/// `Any` only appears in [`type_of`] results, as the element type of an empty
/// set; typechecked ASTs never carry it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Integer,
    Bool,
    Given(String),
    Prod(Box<Type>, Box<Type>),
    Power(Box<Type>),
    Any,
}

impl Type {
    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn power(t: Type) -> Type {
        Type::Power(Box::new(t))
    }

    /// `POW(a * b)`.
    pub fn relation(a: Type, b: Type) -> Type {
        Type::power(Type::prod(a, b))
    }

    pub fn element(&self) -> Option<&Type> {
        match self {
            Type::Power(t) => Some(t),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Prod(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn contains_any(&self) -> bool {
        match self {
            Type::Any => true,
            Type::Prod(a, b) => a.contains_any() || b.contains_any(),
            Type::Power(t) => t.contains_any(),
            _ => false,
        }
    }

    /// Most specific common type, treating `Any` as a wildcard.
    pub fn unify(&self, other: &Type) -> Option<Type> {
        match (self, other) {
            (Type::Any, t) | (t, Type::Any) => Some(t.clone()),
            (Type::Integer, Type::Integer) => Some(Type::Integer),
            (Type::Bool, Type::Bool) => Some(Type::Bool),
            (Type::Given(a), Type::Given(b)) if a == b => Some(Type::Given(a.clone())),
            (Type::Prod(a1, b1), Type::Prod(a2, b2)) => {
                Some(Type::prod(a1.unify(a2)?, b1.unify(b2)?))
            }
            (Type::Power(a), Type::Power(b)) => Some(Type::power(a.unify(b)?)),
            _ => None,
        }
    }

    /// Every carrier name mentioned by the type.
    pub fn carriers(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Given(n) => {
                out.insert(n.clone());
            }
            Type::Prod(a, b) => {
                a.carriers(out);
                b.carriers(out);
            }
            Type::Power(t) => t.carriers(out),
            _ => {}
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Integer => f.write_str("INTEGER"),
            Type::Bool => f.write_str("BOOL"),
            Type::Given(n) => f.write_str(n),
            Type::Prod(a, b) => {
                write!(f, "{a} * ")?;
                if matches!(**b, Type::Prod(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Type::Power(t) => write!(f, "POW({t})"),
            Type::Any => f.write_str("?"),
        }
    }
}

/// Carrier-set names known to a universe or schema.
pub trait CarrierDecls {
    fn has_carrier(&self, name: &str) -> bool;
}

impl CarrierDecls for BTreeSet<String> {
    fn has_carrier(&self, name: &str) -> bool {
        self.contains(name)
    }
}

impl<T: CarrierDecls + ?Sized> CarrierDecls for &T {
    fn has_carrier(&self, name: &str) -> bool {
        (**self).has_carrier(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeOfError {
    #[error("heterogeneous set: {0} and {1}")]
    Heterogeneous(Type, Type),
    #[error("atom of undeclared carrier `{0}`")]
    UnknownCarrier(String),
}

/// Computes the type of a normalized value. Empty sets yield `POW(?)`.
pub fn type_of(v: &Value, decls: &impl CarrierDecls) -> Result<Type, TypeOfError> {
    match v {
        Value::Int(_) => Ok(Type::Integer),
        Value::Bool(_) => Ok(Type::Bool),
        Value::Atom(a) => {
            if decls.has_carrier(a.carrier()) {
                Ok(Type::Given(a.carrier().to_string()))
            } else {
                Err(TypeOfError::UnknownCarrier(a.carrier().to_string()))
            }
        }
        Value::Pair(p) => Ok(Type::prod(type_of(&p.0, decls)?, type_of(&p.1, decls)?)),
        Value::Set(s) => {
            let mut elem = Type::Any;
            for item in s.iter() {
                let t = type_of(item, decls)?;
                elem = elem
                    .unify(&t)
                    .ok_or_else(|| TypeOfError::Heterogeneous(elem.clone(), t))?;
            }
            Ok(Type::power(elem))
        }
    }
}

/// Whether `v` inhabits `t` (with `Any` accepting everything).
pub fn conforms(v: &Value, t: &Type, decls: &impl CarrierDecls) -> bool {
    match type_of(v, decls) {
        Ok(actual) => actual.unify(t).as_ref() == Some(t),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls() -> BTreeSet<String> {
        ["t_signal", "t_interlocking"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn type_of_examples() {
        let d = decls();
        assert_eq!(
            type_of(&Value::set([Value::Int(1), Value::Int(2)]), &d),
            Ok(Type::power(Type::Integer))
        );
        let rel = Value::set([Value::pair(
            Value::atom("t_signal", "s1"),
            Value::atom("t_interlocking", "ik1"),
        )]);
        assert_eq!(
            type_of(&rel, &d),
            Ok(Type::relation(
                Type::Given("t_signal".into()),
                Type::Given("t_interlocking".into())
            ))
        );
        assert_eq!(type_of(&Value::Bool(true), &d), Ok(Type::Bool));
        assert_eq!(type_of(&Value::empty_set(), &d), Ok(Type::power(Type::Any)));
    }

    #[test]
    fn nested_empty_sets_unify() {
        let v = Value::set([Value::empty_set(), Value::set([Value::Int(1)])]);
        assert_eq!(type_of(&v, &decls()), Ok(Type::power(Type::power(Type::Integer))));
    }

    #[test]
    fn heterogeneous_set_is_rejected() {
        let v = Value::set([Value::Int(1), Value::Bool(true)]);
        assert!(matches!(type_of(&v, &decls()), Err(TypeOfError::Heterogeneous(..))));
    }

    #[test]
    fn unknown_carrier_is_rejected() {
        assert!(type_of(&Value::atom("nope", "x"), &decls()).is_err());
    }

    #[test]
    fn conformance() {
        let d = decls();
        let t = Type::relation(Type::Integer, Type::Bool);
        assert!(conforms(&Value::empty_set(), &t, &d));
        assert!(conforms(&Value::set([Value::pair(Value::Int(1), Value::Bool(true))]), &t, &d));
        assert!(!conforms(&Value::set([Value::Int(1)]), &t, &d));
    }
}
