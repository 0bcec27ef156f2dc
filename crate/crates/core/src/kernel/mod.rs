//! Value model, simple types and canonical ordering.

mod types;
mod value;

pub use types::{conforms, type_of, CarrierDecls, Type, TypeOfError};
pub use value::{canonical_cmp, normalize, value_eq, Atom, IntRangeError, SetV, Value};
