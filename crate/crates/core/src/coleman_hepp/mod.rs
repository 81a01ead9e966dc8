//! Finite spin chain read out by a passing particle, with dense and factorized backends.

pub mod chain;
pub mod dense;
pub mod factorized;
pub mod family;

pub use chain::{ChainSpec, Mat2};
pub use dense::{build_dense, dense_f_tensor, dense_traversal_f_tensor, MAX_DENSE_SITES};
pub use factorized::{factorized_f_tensor, magnetization_cells, sector_overlap, traversal_schedule, FactorizedSectorOverlap};
pub use family::{ChainFamily, PerturbationKind, PerturbationRule, SiteSelection};
