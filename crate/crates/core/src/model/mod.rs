//! Generic microsystem-apparatus model and the pointer tensor `F`.

pub mod apparatus;
pub mod composite;
pub mod evolution;
pub mod ftensor;
pub mod functionals;
pub mod properties;
pub mod random;
pub mod system;

pub use apparatus::{check_density_matrix, Apparatus, CellProjector, PhaseCellPartition, DENSE_CAP};
pub use composite::CompositeState;
pub use evolution::{evolve_sectors, sector_hamiltonians, EvolvedSectorStates};
pub use ftensor::{f_tensor, ideal_tensor, FTensor};
pub use functionals::{conditional_expectation, expectation_s, joint_expectation, pointer_weights};
pub use properties::{check_f_properties, FPropertyReport};
pub use system::{Amplitudes, MicroSystem, ObservableS};
