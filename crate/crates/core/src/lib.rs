//! Dependency-ordered synthetic table generation.
//!
//! The pipeline: load a [`table::Table`], discover functional dependencies
//! ([`fd`]), distill them into a column dependency graph ([`distill`]),
//! derive a column order ([`order`]), encode rows as text ([`codec`]), fit
//! and sample an order-governed chain model ([`chain`]), and score the
//! result ([`eval`]). [`sim`] produces planted datasets for testing.

pub mod binning;
pub mod chain;
pub mod codec;
pub mod distill;
pub mod error;
pub mod eval;
pub mod fd;
pub mod order;
pub mod rng;
pub mod sim;
pub mod table;

pub use error::{Error, Result};
