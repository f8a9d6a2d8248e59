//! Symbols, generalized Blumenthal-Getoor indices and exact p-variation for
//! Levy-type processes, with path simulators and an experiment harness.

pub mod error;
pub mod harness;
pub mod levy;
pub mod paths;
pub mod pvar;
pub mod quad;
pub mod registry;
pub mod rng;
pub mod symbols;
pub mod util;

pub use error::{Error, Result};
pub use rng::RandomState;
