use thiserror::Error;

/// Errors produced by generators, solvers, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector/matrix shapes are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The solver could not certify a solution (rank deficiency,
    /// iteration cap, or a failed optimality certificate).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A formula was evaluated outside its domain of validity.
    #[error("domain error: {0}")]
    DomainError(String),

    /// An exhaustive enumeration would exceed the hard work cap.
    #[error("combinatorial cap exceeded: {0}")]
    CapExceeded(String),

    /// An internal structural invariant failed (should not occur on valid input).
    #[error("structural error: {0}")]
    Structural(String),

    /// Experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
