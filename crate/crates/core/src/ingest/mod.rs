//! Schema-driven loading of CSV and JSON data into a typed [`Universe`].

mod load;
mod schema;
mod universe;

pub use load::{dump_universe, load_dataset, DataFiles, LoadError, LoadErrors};
pub use schema::{load_schema, CarrierDecl, CarrierMode, ConstantDecl, Schema, Shape, Source};
pub(crate) use schema::{parse_sections, validate as validate_schema};
pub use universe::{universe_digest, Constant, Universe, UniverseDigest, UniverseError};
