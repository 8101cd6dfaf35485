//! Experiment harness for averaged kernel least-mean-squares regression on
//! the circle: synthetic streams, replicate orchestration, step-size sweeps,
//! rate fits, algorithm comparisons and CSV output.

pub mod config;
pub mod csvio;
pub mod data;
mod error;
pub mod experiment;
pub mod rates;
pub mod selfcheck;

pub use config::ExperimentConfig;
pub use error::{HarnessError, ReplicateFailure, Result};
pub use experiment::{
    compare_algorithms, gamma_sweep, run_replicates, CompareOptions, ComparisonRow,
    SimulationResult, StepPolicy, SweepPoint,
};
pub use rates::{fit_rate, RateFit};
