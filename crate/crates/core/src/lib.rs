//! Attributed structures and the operations built on them: exact comparison,
//! derivation (portion, quotient, morphism), raster explicitation, schemas,
//! associative rules and production-system search.

pub mod arith;
pub mod canon;
pub mod config;
pub mod derivation;
pub mod error;
pub mod iso;
pub mod matching;
pub mod nand;
pub mod pixel;
pub mod rules;
pub mod schema;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use iso::{internal_classes, isomorphic};
pub use structure::{Part, Relation, Structure, TypeCatalog};
