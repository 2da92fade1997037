//! Input categories, property catalogs and the active learner behind catfuzz.
//!
//! This crate is `no_std` (with `alloc`): it holds the pure algorithmic core.
//! Process supervision, file formats and the command line live in the
//! `catfuzz` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bitset;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod learner;
pub mod property;
pub mod value;

pub use bitset::PropSet;
pub use error::Error;
pub use property::{instantiate_catalog, Catalog, CatalogConfig, Fingerprint, PropertyInstance};
pub use value::{summarize, Recipe, RecipeArg, RecipeStep, Scalar, Tensor, Value, ValueStats};
