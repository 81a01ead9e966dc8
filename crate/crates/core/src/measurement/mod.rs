//! Pointer maps, the exact and exponential measurement conditions, decay fits and stability under local perturbations.

pub mod conditions;
pub mod decay;
pub mod pointer;
pub mod stability;

pub use conditions::{
    check_exact_condition, check_weakened_condition, ln_max_pointer_error, ln_von_neumann_residuals, pointer_errors, ExactConditionReport,
    MeasurementVerdict,
};
pub use decay::{fit_decay_points, fit_decay_rate, DecayFit};
pub use pointer::{find_pointer_map, PointerMap};
pub use stability::{stability_test, PerturbedFamily, StabilityOptions, StabilityPoint, StabilityReport};
