use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported spline order m = {0} (supported: 1..=4)")]
    UnsupportedOrder(u32),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("iterate diverged at step {step} (coefficient {value})")]
    Divergence { step: usize, value: f64 },

    #[error("linear system is numerically singular (rank {rank} of {dim})")]
    Singular { rank: usize, dim: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
