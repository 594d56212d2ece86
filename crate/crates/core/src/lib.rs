//! Characteristic modes of thin-wire dipole arrays and their coupled modes
//! obtained by projecting the array onto the isolated-element mode subspace.

pub mod cma;
pub mod coupled;
pub mod error;
mod extended;
pub mod linalg;
pub mod mom;
pub mod oracle;

pub use error::{Error, Result};
