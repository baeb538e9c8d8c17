//! An untyped lambda calculus with reverse-mode automatic differentiation as an
//! in-language operator, and an operator that attaches custom derivatives to any value.
//!
//! Source text goes through [`reader`], [`syntax`] (desugaring and A-normal form) and is
//! evaluated by [`runtime::Interpreter`]; `rad` applies the source transformation in
//! [`transform`] to closures on demand.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod gradcheck;
pub mod prim;
pub mod reader;
pub mod runtime;
pub mod stdlib;
pub mod syntax;
#[cfg(test)]
pub(crate) mod testgen;
pub mod transform;

pub use error::{Error, Result};
pub use runtime::{Interpreter, Value};
