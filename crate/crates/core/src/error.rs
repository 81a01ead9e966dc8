use thiserror::Error;

/// Errors raised by the model, measurement, chain and coarse-graining layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent shapes or an object that violates its defining invariants.
    #[error("structural error: {0}")]
    Structural(String),

    /// A numerical routine failed or produced a result outside tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An operation was called with inputs outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("conditioning on a null macrostate: cell {cell} has weight {weight:e}")]
    NullMacrostate { cell: usize, weight: f64 },

    #[error("no unique pointer correspondence: {0}")]
    AmbiguousPointer(String),

    /// The dense backend cannot hold the requested problem.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
