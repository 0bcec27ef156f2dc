use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{conforms, Atom, SetV, Type, Value};
use crate::lang::Declarations;

#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub ty: Type,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("constant `{name}` does not have its declared type {ty}")]
    TypeMismatch { name: String, ty: Type },
    #[error("constant `{name}` mentions `{element}`, which is not an element of carrier `{carrier}`")]
    UnknownAtom {
        name: String,
        carrier: String,
        element: String,
    },
    #[error("name `{0}` is declared both as a carrier and as a constant")]
    NameClash(String),
}

/// Instantiated data model: carrier sets plus typed constants.
///
/// Immutable once built; share it behind a reference or an `Arc`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Universe {
    carriers: BTreeMap<String, SetV>,
    constants: BTreeMap<String, Constant>,
    elements: BTreeMap<String, Vec<String>>,
}

impl Universe {
    pub fn new(
        carriers: BTreeMap<String, BTreeSet<String>>,
        constants: BTreeMap<String, Constant>,
    ) -> Result<Universe, UniverseError> {
        for name in constants.keys() {
            if carriers.contains_key(name) {
                return Err(UniverseError::NameClash(name.clone()));
            }
        }
        let known: BTreeSet<String> = carriers.keys().cloned().collect();
        for (name, c) in &constants {
            if !conforms(&c.value, &c.ty, &known) {
                return Err(UniverseError::TypeMismatch {
                    name: name.clone(),
                    ty: c.ty.clone(),
                });
            }
            check_atoms(name, &c.value, &carriers)?;
        }
        let mut elements: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let carriers = carriers
            .into_iter()
            .map(|(carrier, elems)| {
                for e in &elems {
                    elements.entry(e.clone()).or_default().push(carrier.clone());
                }
                let atoms = elems.iter().map(|e| Value::atom(&carrier, e)).collect();
                (carrier, SetV::from_sorted(atoms))
            })
            .collect();
        Ok(Universe {
            carriers,
            constants,
            elements,
        })
    }

    pub fn carriers(&self) -> &BTreeMap<String, SetV> {
        &self.carriers
    }

    pub fn carrier(&self, name: &str) -> Option<&SetV> {
        self.carriers.get(name)
    }

    pub fn constants(&self) -> &BTreeMap<String, Constant> {
        &self.constants
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.get(name)
    }

    /// Atom named `name` when exactly one carrier declares it.
    pub fn element(&self, name: &str) -> Option<Atom> {
        match self.elements.get(name).map(Vec::as_slice) {
            Some([carrier]) => Some(Atom::new(carrier.as_str(), name)),
            _ => None,
        }
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.constants.contains_key(name) || self.carriers.contains_key(name) || self.elements.contains_key(name)
    }

    /// Declarations for typechecking rules against this data, with every
    /// carrier's elements known.
    pub fn declarations(&self) -> Declarations {
        let carriers = self
            .carriers
            .iter()
            .map(|(name, set)| {
                let elems = set
                    .iter()
                    .filter_map(|v| match v {
                        Value::Atom(a) => Some(a.name().to_string()),
                        _ => None,
                    })
                    .collect();
                (name.clone(), Some(elems))
            })
            .collect();
        let constants = self
            .constants
            .iter()
            .map(|(name, c)| (name.clone(), c.ty.clone()))
            .collect();
        Declarations::new(carriers, constants)
    }

    pub fn digest(&self) -> UniverseDigest {
        universe_digest(self)
    }
}

fn check_atoms(name: &str, v: &Value, carriers: &BTreeMap<String, BTreeSet<String>>) -> Result<(), UniverseError> {
    match v {
        Value::Atom(a) => {
            if carriers.get(a.carrier()).is_some_and(|elems| elems.contains(a.name())) {
                Ok(())
            } else {
                Err(UniverseError::UnknownAtom {
                    name: name.to_string(),
                    carrier: a.carrier().to_string(),
                    element: a.name().to_string(),
                })
            }
        }
        Value::Pair(p) => {
            check_atoms(name, &p.0, carriers)?;
            check_atoms(name, &p.1, carriers)
        }
        Value::Set(s) => s.iter().try_for_each(|x| check_atoms(name, x, carriers)),
        Value::Int(_) | Value::Bool(_) => Ok(()),
    }
}

/// Item counts for report headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseDigest {
    /// Cardinality of each constant; scalars count 1.
    pub constants: BTreeMap<String, usize>,
    pub carriers: BTreeMap<String, usize>,
    pub total_items: usize,
}

pub fn universe_digest(u: &Universe) -> UniverseDigest {
    let constants: BTreeMap<String, usize> = u
        .constants
        .iter()
        .map(|(name, c)| (name.clone(), c.value.item_count()))
        .collect();
    let carriers = u.carriers.iter().map(|(name, s)| (name.clone(), s.len())).collect();
    let total_items = constants.values().sum();
    UniverseDigest {
        constants,
        carriers,
        total_items,
    }
}
