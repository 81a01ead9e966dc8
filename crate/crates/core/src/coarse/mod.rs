//! Coarse-grained magnetization-type observables, phase cells and large-deviation rates.

pub mod cells;
pub mod observable;
pub mod probability;
pub mod rate;

pub use cells::{coarse_grain, CellPartitionSpec, CoarseGraining};
pub use observable::IntensiveObservable;
pub use probability::{cell_probability_dense, cell_probability_product, ProductSpinState};
pub use rate::{check_ldp_conditions, estimate_rate, ln_window_probability, LdpConditionReport, ProductFamily, RateFunctionEstimate, RateSample};
