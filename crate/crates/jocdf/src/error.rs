use thiserror::Error;

/// Errors surfaced by the solvers and their input builders.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed query structure (duplicate indices, mismatched lengths, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A value is outside its admissible range.
    #[error("range error: {0}")]
    Range(String),

    /// A CDF provider violated monotonicity or normalization.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A conditional provider returned an invalid probability vector.
    #[error("invalid conditional: {0}")]
    InvalidConditional(String),

    /// Inputs to a solver are inconsistent with each other.
    #[error("input error: {0}")]
    Input(String),

    /// A resource guard refused the computation.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
