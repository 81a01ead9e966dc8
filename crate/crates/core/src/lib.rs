//! Simulation of pointer-cell measurement statistics for a microsystem coupled
//! to a macroscopic apparatus.

pub mod coarse;
pub mod coleman_hepp;
pub mod error;
pub mod fit;
pub mod harness;
pub mod linalg;
pub mod logspace;
pub mod measurement;
pub mod model;
pub mod product;

pub use error::{Error, Result};
