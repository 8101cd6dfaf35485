//! Averaged stochastic gradient (least-mean-squares) regression in reproducing
//! kernel Hilbert spaces.
//!
//! The crate provides
//!
//! * exact Bernoulli polynomials and the periodic spline kernels built from them
//!   ([`bernoulli`], [`kernels`]),
//! * the averaged and regularized kernel least-mean-squares recursions and a
//!   kernel ridge baseline ([`estimator`]),
//! * closed-form excess risk on the spline testbed with independent
//!   Fourier and quadrature evaluators ([`risk`]),
//! * step-size exponents, predicted rates and the finite-horizon error bound
//!   ([`theory`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiments use.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernoulli;
mod error;
pub mod estimator;
pub mod kernels;
pub mod risk;
mod scalar;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SplineKernel = kernels::PeriodicSplineKernel<f64>;
pub type LinearKernel = kernels::LinearKernel<f64>;
pub type GramMatrix = kernels::GramMatrix<f64>;
pub type Expansion1d = estimator::KernelExpansion<f64, f64>;
pub type AveragedExpansion1d = estimator::AveragedExpansion<f64, f64>;
pub type AlgorithmSpec = estimator::AlgorithmSpec<f64>;
pub type StepSchedule = estimator::StepSchedule<f64>;
pub type RegularizationSchedule = estimator::RegularizationSchedule<f64>;
pub type ProblemConstants = estimator::ProblemConstants<f64>;
pub type PairTable = estimator::PairTable<f64>;
pub type RiskEvaluator = risk::RiskEvaluator<f64>;
pub type TargetFunction = risk::TargetFunction<f64>;
pub type BoundParams = theory::BoundParams<f64>;
