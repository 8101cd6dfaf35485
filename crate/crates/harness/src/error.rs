use thiserror::Error;

/// Errors surfaced by the harness and mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ksgd::Error),
    /// One entry per diverged replicate.
    #[error("divergence in {} replicate(s): {}", .0.len(), describe(.0))]
    Divergence(Vec<ReplicateFailure>),
    #[error("selfcheck failed: {0}")]
    Selfcheck(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A replicate that did not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate: usize,
    /// Horizon of the run that failed.
    pub horizon: usize,
    pub message: String,
}

fn describe(failures: &[ReplicateFailure]) -> String {
    failures
        .iter()
        .map(|f| {
            format!(
                "replicate {} (n = {}): {}",
                f.replicate, f.horizon, f.message
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(e) => match e {
                ksgd::Error::Divergence { .. } => 3,
                ksgd::Error::Config(_) | ksgd::Error::UnsupportedOrder(_) => 2,
                _ => 1,
            },
            HarnessError::Divergence(_) => 3,
            HarnessError::Selfcheck(_) => 4,
            HarnessError::InvalidInput(_) | HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
