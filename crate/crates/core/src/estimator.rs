//! Stochastic-approximation recursions in coefficient form and the batch
//! kernel ridge baseline.
//!
//! Every recursion handled here is an instance of
//!
//! ```text
//! g_0 = 0
//! g_n = (1 - gamma_n lambda_n) g_{n-1} - gamma_n (g_{n-1}(x_n) - y_n) K_{x_n}
//! ```
//!
//! so after `n` steps `g_n = sum_i a_i K_{x_i}` with exactly one new
//! coefficient per step. The shrink factor `1 - gamma_n lambda_n` multiplies
//! all previous coefficients; it is kept as one global scale so a step stays
//! `O(n)` kernel evaluations.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, RealField};

use crate::kernels::{gram, Kernel};
use crate::theory::{self, Setting};
use crate::{Error, Result, Scalar};

/// Coefficients whose magnitude exceeds this abort the run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Read access shared by last-iterate and averaged expansions.
pub trait Expansion<P, T: Scalar> {
    fn centers(&self) -> &[P];

    /// Coefficients of the represented function with any global scale applied.
    fn weights(&self) -> Vec<T>;

    fn evaluate<K: Kernel<T, Point = P>>(&self, kernel: &K, x: &P) -> T {
        self.centers()
            .iter()
            .zip(self.weights())
            .map(|(c, w)| w * kernel.eval(c, x))
            .sum()
    }
}

/// `g(x) = scale * sum_i coeffs[i] K(centers[i], x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion<P, T> {
    centers: Vec<P>,
    coeffs: Vec<T>,
    scale: T,
}

impl<P, T: Scalar> Default for KernelExpansion<P, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P, T: Scalar> KernelExpansion<P, T> {
    pub fn new() -> Self {
        Self {
            centers: Vec::new(),
            coeffs: Vec::new(),
            scale: T::one(),
        }
    }

    pub fn from_parts(centers: Vec<P>, coeffs: Vec<T>) -> Result<Self> {
        Self::with_scale(centers, coeffs, T::one())
    }

    pub fn with_scale(centers: Vec<P>, coeffs: Vec<T>, scale: T) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: coeffs.len(),
            });
        }
        if !(scale > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            centers,
            coeffs,
            scale,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Raw coefficients, before the global scale.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    fn push(&mut self, center: P, coeff: T) {
        self.centers.push(center);
        self.coeffs.push(coeff);
    }

    /// Folds the scale into the coefficients.
    fn renormalize(&mut self) {
        let s = self.scale;
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self.scale = T::one();
    }
}

impl<P, T: Scalar> Expansion<P, T> for KernelExpansion<P, T> {
    fn centers(&self) -> &[P] {
        &self.centers
    }

    fn weights(&self) -> Vec<T> {
        self.coeffs.iter().map(|&c| c * self.scale).collect()
    }
}

/// The uniform average `(g_0 + ... + g_n) / (n + 1)` of the iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedExpansion<P, T> {
    centers: Vec<P>,
    coeffs: Vec<T>,
}

impl<P, T: Scalar> AveragedExpansion<P, T> {
    pub fn from_parts(centers: Vec<P>, coeffs: Vec<T>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { centers, coeffs })
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

impl<P, T: Scalar> Expansion<P, T> for AveragedExpansion<P, T> {
    fn centers(&self) -> &[P] {
        &self.centers
    }

    fn weights(&self) -> Vec<T> {
        self.coeffs.clone()
    }
}

/// `scale * sum_i a_i K(x_i, x)`.
pub fn evaluate<T: Scalar, K: Kernel<T>, E: Expansion<K::Point, T>>(
    expansion: &E,
    kernel: &K,
    x: &K::Point,
) -> T {
    expansion.evaluate(kernel, x)
}

/// Step sizes `gamma_i`, `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<T> {
    /// Constant `gamma`, chosen from the known horizon.
    FiniteHorizon { gamma: T },
    /// `gamma0 / i^zeta`.
    Online { gamma0: T, zeta: T },
    /// `gamma0 * (n0 + i)^(-zeta)`.
    Shifted { gamma0: T, n0: usize, zeta: T },
}

impl<T: Scalar> StepSchedule<T> {
    pub fn step(&self, i: usize) -> T {
        match *self {
            StepSchedule::FiniteHorizon { gamma } => gamma,
            StepSchedule::Online { gamma0, zeta } => gamma0 * T::from_usize_lossy(i).powf(-zeta),
            StepSchedule::Shifted { gamma0, n0, zeta } => {
                gamma0 * T::from_usize_lossy(n0 + i).powf(-zeta)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::FiniteHorizon { gamma } => gamma > T::zero() && gamma.is_finite(),
            StepSchedule::Online { gamma0, zeta } | StepSchedule::Shifted { gamma0, zeta, .. } => {
                gamma0 > T::zero() && gamma0.is_finite() && zeta >= T::zero() && zeta < T::one()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid step schedule {self:?}")))
        }
    }
}

/// Regularization parameters `lambda_i`, `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizationSchedule<T> {
    None,
    Constant {
        lambda: T,
    },
    /// `lambda_i = (n0 + i)^(-1/(2r+1)) / a`, paired with
    /// `gamma_i = a (n0 + i)^(-2r/(2r+1))`.
    TarresYao {
        a: T,
        n0: usize,
        r: T,
    },
}

impl<T: Scalar> RegularizationSchedule<T> {
    pub fn lambda(&self, i: usize) -> T {
        match *self {
            RegularizationSchedule::None => T::zero(),
            RegularizationSchedule::Constant { lambda } => lambda,
            RegularizationSchedule::TarresYao { a, n0, r } => {
                let two_r_1 = r + r + T::one();
                T::from_usize_lossy(n0 + i).powf(-T::one() / two_r_1) / a
            }
        }
    }

    /// Step schedule paired with the Tarres-Yao regularization, if this is one.
    pub fn paired_step(&self) -> Option<StepSchedule<T>> {
        match *self {
            RegularizationSchedule::TarresYao { a, n0, r } => Some(StepSchedule::Shifted {
                gamma0: a,
                n0,
                zeta: (r + r) / (r + r + T::one()),
            }),
            _ => None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, RegularizationSchedule::None)
    }
}

/// The four recursions compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    /// Averaged, unregularized, large steps from the capacity-aware exponents.
    Ours,
    /// Averaged, unregularized, steps `gamma0 n^(-2r/(2r+1))`.
    Zhang,
    /// Last iterate, unregularized, steps `gamma0 n^(-2r/(2r+1))`.
    YingPontil,
    /// Last iterate, regularized.
    TarresYao,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Ours,
        AlgorithmKind::Zhang,
        AlgorithmKind::YingPontil,
        AlgorithmKind::TarresYao,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Ours => "ours",
            AlgorithmKind::Zhang => "zhang",
            AlgorithmKind::YingPontil => "ying_pontil",
            AlgorithmKind::TarresYao => "tarres_yao",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Problem constants the step-size presets depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants<T> {
    /// Eigenvalue decay exponent.
    pub alpha: T,
    /// Source-condition exponent.
    pub r: T,
    /// `sup_x K(x, x)`.
    pub r_sq: T,
}

/// Fully specified recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec<T> {
    pub kind: AlgorithmKind,
    pub averaged: bool,
    pub step: StepSchedule<T>,
    pub reg: RegularizationSchedule<T>,
}

/// Offset `n0` of the Tarres-Yao schedules.
pub const TARRES_YAO_N0: usize = 1;
/// Constant `a` of the Tarres-Yao schedules.
pub const TARRES_YAO_A: f64 = 4.0;

impl<T: Scalar> AlgorithmSpec<T> {
    /// Preset configuration of `kind` for the given problem.
    ///
    /// In the finite-horizon setting every schedule is frozen at its value for
    /// `horizon`; in the online setting the same exponents are applied per step.
    /// `gamma0` defaults to `1 / R^2`.
    pub fn preset(
        kind: AlgorithmKind,
        problem: &ProblemConstants<T>,
        setting: Setting,
        horizon: usize,
        gamma0: Option<T>,
    ) -> Result<Self> {
        let gamma0 = gamma0.unwrap_or(T::one() / problem.r_sq);
        let (alpha, r) = (problem.alpha, problem.r);
        let competitor_zeta = (r + r) / (r + r + T::one());
        let horizon_t = T::from_usize_lossy(horizon.max(1));
        let spec = match kind {
            AlgorithmKind::Ours => {
                let exponent = match setting {
                    Setting::FiniteHorizon => theory::step_exponent_finite_horizon(alpha, r),
                    Setting::Online => theory::step_exponent_online(alpha, r),
                };
                Self::unregularized(kind, true, setting, gamma0, -exponent, horizon_t)
            }
            AlgorithmKind::Zhang => {
                Self::unregularized(kind, true, setting, gamma0, competitor_zeta, horizon_t)
            }
            AlgorithmKind::YingPontil => {
                Self::unregularized(kind, false, setting, gamma0, competitor_zeta, horizon_t)
            }
            AlgorithmKind::TarresYao => {
                let reg = RegularizationSchedule::TarresYao {
                    a: T::lit(TARRES_YAO_A),
                    n0: TARRES_YAO_N0,
                    r,
                };
                let online_step = reg.paired_step().expect("Tarres-Yao has a paired step");
                match setting {
                    Setting::Online => Self {
                        kind,
                        averaged: false,
                        step: online_step,
                        reg,
                    },
                    Setting::FiniteHorizon => Self {
                        kind,
                        averaged: false,
                        step: StepSchedule::FiniteHorizon {
                            gamma: online_step.step(horizon.max(1)),
                        },
                        reg: RegularizationSchedule::Constant {
                            lambda: reg.lambda(horizon.max(1)),
                        },
                    },
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    fn unregularized(
        kind: AlgorithmKind,
        averaged: bool,
        setting: Setting,
        gamma0: T,
        zeta: T,
        horizon: T,
    ) -> Self {
        let step = match setting {
            Setting::FiniteHorizon => StepSchedule::FiniteHorizon {
                gamma: gamma0 * horizon.powf(-zeta),
            },
            Setting::Online => StepSchedule::Online { gamma0, zeta },
        };
        Self {
            kind,
            averaged,
            step,
            reg: RegularizationSchedule::None,
        }
    }

    /// Averaged, unregularized recursion with a constant step.
    pub fn constant_step(gamma: T) -> Self {
        Self {
            kind: AlgorithmKind::Ours,
            averaged: true,
            step: StepSchedule::FiniteHorizon { gamma },
            reg: RegularizationSchedule::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        match self.reg {
            RegularizationSchedule::Constant { lambda } if !(lambda >= T::zero()) => Err(
                Error::Config(format!("regularization must be non-negative, got {lambda}")),
            ),
            RegularizationSchedule::TarresYao { a, r, .. } if a < T::lit(4.0) || r <= T::zero() => {
                Err(Error::Config(format!(
                    "Tarres-Yao schedule needs a >= 4 and r > 0 (a = {a}, r = {r})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Iterates recorded at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<P, T> {
    /// Number of samples consumed.
    pub n: usize,
    pub last: KernelExpansion<P, T>,
    pub averaged: AveragedExpansion<P, T>,
}

impl<P: Clone, T: Scalar> Snapshot<P, T> {
    /// Coefficients of the algorithm's designated output: the average for
    /// averaged recursions, the last iterate otherwise.
    pub fn output_weights(&self, averaged: bool) -> Vec<T> {
        if averaged {
            self.averaged.weights()
        } else {
            self.last.weights()
        }
    }
}

/// Averaged-iterate coefficients from the coefficients `a_i` as inserted at
/// step `i` and the per-step shrink factors `rho_i = 1 - gamma_i lambda_i`.
///
/// The coefficient of `K_{x_i}` in `g_k` is `a_i * rho_{i+1} * ... * rho_k`,
/// so averaging `g_0, ..., g_n` gives `a_i S_i / (n + 1)` with
/// `S_n = 1`, `S_i = 1 + rho_{i+1} S_{i+1}`. Without regularization
/// `S_i = n + 1 - i`.
pub fn averaged_coefficients<T: Scalar>(coeffs: &[T], shrinks: &[T]) -> Result<Vec<T>> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one coefficient".into()));
    }
    if shrinks.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: shrinks.len(),
        });
    }
    let denom = T::from_usize_lossy(n + 1);
    let mut out = vec![T::zero(); n];
    let mut tail = T::one();
    out[n - 1] = coeffs[n - 1] / denom;
    for i in (0..n - 1).rev() {
        tail = T::one() + shrinks[i + 1] * tail;
        out[i] = coeffs[i] * tail / denom;
    }
    Ok(out)
}

/// Source of `K(x_i, x_n)` values for the recursion.
trait PairSource<T> {
    /// `sum_{i < n} w[i] K(x_i, x_n)` (0-based `n`).
    fn dot_prefix(&self, n: usize, w: &[T]) -> T;
}

struct KernelSource<'a, K: Kernel<T>, T: Scalar> {
    kernel: &'a K,
    xs: Vec<&'a K::Point>,
}

impl<K: Kernel<T>, T: Scalar> PairSource<T> for KernelSource<'_, K, T> {
    #[inline]
    fn dot_prefix(&self, n: usize, w: &[T]) -> T {
        let xn = self.xs[n];
        self.xs[..n]
            .iter()
            .zip(w)
            .map(|(x, &a)| a * self.kernel.eval(x, xn))
            .sum()
    }
}

/// Kernel values between sample points, stored as a packed lower triangle
/// (diagonal included). Lets many runs over the same stream share the
/// kernel evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> PairTable<T> {
    pub fn new<K: Kernel<T>>(kernel: &K, xs: &[K::Point]) -> Self {
        let n = xs.len();
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(kernel.eval(&xs[i], &xs[j]));
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `K(x_i, x_j)` for `j <= i < len` of row `i`, i.e. `K(x_i, x_0..=x_i)`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.row(i)[j]
    }

    /// `w^T K w` over the leading `w.len()` points.
    pub fn quadratic_form(&self, w: &[T]) -> T {
        let mut total = T::zero();
        for (i, &wi) in w.iter().enumerate() {
            let row = self.row(i);
            let off: T = row[..i].iter().zip(w).map(|(&k, &wj)| k * wj).sum();
            total += wi * (off + off + row[i] * wi);
        }
        total
    }
}

impl<T: Scalar> PairSource<T> for PairTable<T> {
    #[inline]
    fn dot_prefix(&self, n: usize, w: &[T]) -> T {
        self.row(n)[..n].iter().zip(w).map(|(&k, &a)| k * a).sum()
    }
}

/// Runs `spec` over `stream`, recording snapshots at `checkpoints`
/// (sorted, each in `1..=stream.len()`).
pub fn sgd_run<T: Scalar, K: Kernel<T>>(
    kernel: &K,
    stream: &[(K::Point, T)],
    spec: &AlgorithmSpec<T>,
    checkpoints: &[usize],
) -> Result<Vec<Snapshot<K::Point, T>>> {
    let source = KernelSource {
        kernel,
        xs: stream.iter().map(|(x, _)| x).collect(),
    };
    let centers: Vec<K::Point> = stream.iter().map(|(x, _)| x.clone()).collect();
    let ys: Vec<T> = stream.iter().map(|&(_, y)| y).collect();
    run_recursion(&source, &centers, &ys, spec, checkpoints)
}

/// Same recursion as [`sgd_run`] reading kernel values from a precomputed
/// table of the stream's points. `xs` and `ys` may be a prefix of the points
/// the table was built for.
pub fn sgd_run_with_table<T: Scalar, P: Clone>(
    table: &PairTable<T>,
    xs: &[P],
    ys: &[T],
    spec: &AlgorithmSpec<T>,
    checkpoints: &[usize],
) -> Result<Vec<Snapshot<P, T>>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if ys.len() > table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            found: ys.len(),
        });
    }
    run_recursion(table, xs, ys, spec, checkpoints)
}

fn run_recursion<T: Scalar, P: Clone, S: PairSource<T>>(
    source: &S,
    xs: &[P],
    ys: &[T],
    spec: &AlgorithmSpec<T>,
    checkpoints: &[usize],
) -> Result<Vec<Snapshot<P, T>>> {
    spec.validate()?;
    validate_checkpoints(checkpoints, ys.len())?;
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let threshold = T::lit(DIVERGENCE_THRESHOLD);
    let floor = T::min_positive_value().sqrt();

    let mut iterate: KernelExpansion<P, T> = KernelExpansion::new();
    // coefficient a_i as inserted, and shrink factor applied at step i
    let mut inserted: Vec<T> = Vec::with_capacity(horizon);
    let mut shrinks: Vec<T> = Vec::with_capacity(horizon);
    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = checkpoints.iter().peekable();

    for idx in 0..horizon {
        let step = idx + 1;
        let gamma = spec.step.step(step);
        let lambda = spec.reg.lambda(step);
        let prediction = iterate.scale * source.dot_prefix(idx, &iterate.coeffs);
        let rho = T::one() - gamma * lambda;
        if !(rho > T::zero()) {
            return Err(Error::Config(format!(
                "shrink factor 1 - gamma*lambda = {rho} is not positive at step {step}"
            )));
        }
        iterate.scale *= rho;
        if iterate.scale < floor {
            iterate.renormalize();
        }
        let a = -gamma * (prediction - ys[idx]);
        if !a.is_finite() || a.abs() > threshold {
            return Err(Error::Divergence {
                step,
                value: a.to_f64().unwrap_or(f64::NAN),
            });
        }
        iterate.push(xs[idx].clone(), a / iterate.scale);
        inserted.push(a);
        shrinks.push(rho);

        while next_checkpoint.peek().is_some_and(|&&c| c == step) {
            next_checkpoint.next();
            let avg = averaged_coefficients(&inserted, &shrinks)?;
            snapshots.push(Snapshot {
                n: step,
                last: iterate.clone(),
                averaged: AveragedExpansion {
                    centers: xs[..step].to_vec(),
                    coeffs: avg,
                },
            });
        }
    }
    Ok(snapshots)
}

fn validate_checkpoints(checkpoints: &[usize], available: usize) -> Result<()> {
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("checkpoints must be sorted".into()));
    }
    if let Some(&c) = checkpoints.iter().find(|&&c| c == 0 || c > available) {
        return Err(Error::InvalidInput(format!(
            "checkpoint {c} outside 1..={available}"
        )));
    }
    Ok(())
}

/// Kernel ridge regression: solves `(K + lambda I) a = y`.
pub fn ridge_solve<T: Scalar + RealField, K: Kernel<T>>(
    kernel: &K,
    xs: &[K::Point],
    ys: &[T],
    lambda: T,
) -> Result<KernelExpansion<K::Point, T>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InvalidInput(
            "ridge regression needs at least one sample".into(),
        ));
    }
    if !(lambda >= T::zero()) {
        return Err(Error::Config(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let n = xs.len();
    let mut system = gram(kernel, xs).into_matrix();
    for i in 0..n {
        system[(i, i)] += lambda;
    }
    let rhs = DVector::from_column_slice(ys);
    let coeffs = if lambda > T::zero() {
        match system.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => solve_checked(system, &rhs)?,
        }
    } else {
        solve_checked(system, &rhs)?
    };
    KernelExpansion::from_parts(xs.to_vec(), coeffs.iter().copied().collect())
}

/// Rank-checked solve for possibly singular symmetric systems.
fn solve_checked<T: Scalar + RealField>(
    system: DMatrix<T>,
    rhs: &DVector<T>,
) -> Result<DVector<T>> {
    let n = system.nrows();
    let svd = system.svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * T::from_usize_lossy(n) * T::epsilon();
    let rank = svd.rank(tol);
    if rank < n {
        return Err(Error::Singular { rank, dim: n });
    }
    svd.solve(rhs, tol)
        .map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Output of the primal finite-dimensional recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDimRun<T> {
    pub last: Vec<T>,
    /// `(theta_0 + ... + theta_n) / (n + 1)`.
    pub averaged: Vec<T>,
}

/// Averaged least-mean-squares with constant step on `R^d`, kept as dense
/// vectors: `theta_n = theta_{n-1} - gamma (<theta_{n-1}, x_n> - y_n) x_n`,
/// `theta_0 = 0`.
pub fn finite_dim_sgd<T: Scalar>(stream: &[(Vec<T>, T)], gamma: T) -> Result<FiniteDimRun<T>> {
    let dim = stream
        .first()
        .map(|(x, _)| x.len())
        .ok_or_else(|| Error::InvalidInput("empty stream".into()))?;
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if !(gamma > T::zero()) {
        return Err(Error::Config(format!("step must be positive, got {gamma}")));
    }
    let threshold = T::lit(DIVERGENCE_THRESHOLD);
    let mut theta = vec![T::zero(); dim];
    let mut sum = vec![T::zero(); dim];
    for (step, (x, y)) in stream.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        let pred: T = theta.iter().zip(x).map(|(&t, &v)| t * v).sum();
        let g = gamma * (pred - *y);
        for ((t, s), &v) in theta.iter_mut().zip(sum.iter_mut()).zip(x) {
            *t -= g * v;
            *s += *t;
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite() || t.abs() > threshold) {
            return Err(Error::Divergence {
                step: step + 1,
                value: bad.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let denom = T::from_usize_lossy(stream.len() + 1);
    Ok(FiniteDimRun {
        averaged: sum.into_iter().map(|s| s / denom).collect(),
        last: theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{LinearKernel, PeriodicSplineKernel};

    fn spline(m: u32) -> PeriodicSplineKernel<f64> {
        PeriodicSplineKernel::new(m).unwrap()
    }

    #[test]
    fn first_step_coefficient() {
        let k = spline(1);
        let spec = AlgorithmSpec::constant_step(0.7);
        let snaps = sgd_run(&k, &[(0.3, 2.0)], &spec, &[1]).unwrap();
        assert_eq!(snaps[0].last.weights(), vec![1.4]);
        assert_eq!(snaps[0].averaged.coeffs(), &[0.7]);
    }

    #[test]
    fn zero_responses_give_zero_expansion() {
        let k = spline(2);
        let stream: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 / 20.0, 0.0)).collect();
        let snaps = sgd_run(&k, &stream, &AlgorithmSpec::constant_step(100.0), &[5, 20]).unwrap();
        for s in snaps {
            assert!(s.last.weights().iter().all(|&a| a == 0.0));
            assert!(s.averaged.coeffs().iter().all(|&a| a == 0.0));
            assert_eq!(s.last.evaluate(&k, &0.4), 0.0);
        }
    }

    #[test]
    fn averaging_single_coefficient() {
        assert_eq!(averaged_coefficients(&[3.0], &[1.0]).unwrap(), vec![1.5]);
        assert_eq!(
            averaged_coefficients(&[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(averaged_coefficients::<f64>(&[], &[]).is_err());
        assert!(averaged_coefficients(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn unregularized_average_weights() {
        let a = [1.0, 2.0, 3.0];
        let avg = averaged_coefficients(&a, &[1.0; 3]).unwrap();
        // (n + 1 - i) / (n + 1) * a_i
        assert_eq!(avg, vec![3.0 / 4.0, 2.0 * 2.0 / 4.0, 3.0 / 4.0]);
    }

    #[test]
    fn evaluate_examples() {
        let k = spline(1);
        let empty: KernelExpansion<f64, f64> = KernelExpansion::new();
        assert_eq!(evaluate(&empty, &k, &0.2), 0.0);
        let single = KernelExpansion::from_parts(vec![0.1], vec![1.0]).unwrap();
        assert_eq!(evaluate(&single, &k, &0.35), k.eval(&0.1, &0.35));
        let e =
            KernelExpansion::with_scale(vec![0.1, 0.5, 0.9], vec![1.0, -2.0, 0.5], 2.0).unwrap();
        let hand = 2.0 * (k.eval(&0.1, &0.3) - 2.0 * k.eval(&0.5, &0.3) + 0.5 * k.eval(&0.9, &0.3));
        assert!((e.evaluate(&k, &0.3) - hand).abs() < 1e-14);
    }

    #[test]
    fn expansion_rejects_bad_parts() {
        assert!(KernelExpansion::<f64, f64>::from_parts(vec![0.1], vec![]).is_err());
        assert!(KernelExpansion::<f64, f64>::with_scale(vec![0.1], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn checkpoint_validation() {
        let k = spline(1);
        let stream = [(0.1, 1.0), (0.2, 1.0)];
        let spec = AlgorithmSpec::constant_step(1.0);
        assert!(sgd_run(&k, &stream, &spec, &[0]).is_err());
        assert!(sgd_run(&k, &stream, &spec, &[3]).is_err());
        assert!(sgd_run(&k, &stream, &spec, &[2, 1]).is_err());
        assert_eq!(sgd_run(&k, &stream, &spec, &[]).unwrap().len(), 0);
        assert_eq!(sgd_run(&k, &stream, &spec, &[1, 1, 2]).unwrap().len(), 3);
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let k = spline(1);
        // gamma * K(x, x) = 1e3 makes every step amplify the residual
        let stream: Vec<(f64, f64)> = (0..50)
            .map(|i| (0.0, if i == 0 { 1.0 } else { 0.0 }))
            .collect();
        let err = sgd_run(&k, &stream, &AlgorithmSpec::constant_step(12_000.0), &[50]).unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step > 1 && step <= 50),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn step_schedules() {
        let fh = StepSchedule::FiniteHorizon { gamma: 0.5_f64 };
        assert_eq!(fh.step(1), 0.5);
        assert_eq!(fh.step(1000), 0.5);
        let on = StepSchedule::Online {
            gamma0: 2.0_f64,
            zeta: 0.5,
        };
        assert!((on.step(4) - 1.0).abs() < 1e-15);
        let reg = RegularizationSchedule::TarresYao {
            a: 4.0_f64,
            n0: 1,
            r: 0.5,
        };
        // gamma * lambda = 1 / (n0 + i)
        let step = reg.paired_step().unwrap();
        for i in 1..10 {
            assert!((step.step(i) * reg.lambda(i) - 1.0 / (1.0 + i as f64)).abs() < 1e-15);
        }
        assert!(StepSchedule::Online {
            gamma0: 1.0_f64,
            zeta: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for k in AlgorithmKind::ALL {
            assert_eq!(k.name().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert!("sgd".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn presets_follow_the_summary_table() {
        let problem = ProblemConstants {
            alpha: 2.0_f64,
            r: 0.75,
            r_sq: 1.0 / 12.0,
        };
        let n = 10_000;
        let ours = AlgorithmSpec::preset(
            AlgorithmKind::Ours,
            &problem,
            Setting::FiniteHorizon,
            n,
            None,
        )
        .unwrap();
        assert!(ours.averaged && ours.reg.is_none());
        assert!((ours.step.step(1) - 12.0 * 0.01).abs() < 1e-12);
        let zhang = AlgorithmSpec::preset(
            AlgorithmKind::Zhang,
            &problem,
            Setting::FiniteHorizon,
            n,
            None,
        )
        .unwrap();
        assert!(zhang.averaged);
        assert!((zhang.step.step(7) - 12.0 * (n as f64).powf(-0.6)).abs() < 1e-12);
        let yp = AlgorithmSpec::preset(
            AlgorithmKind::YingPontil,
            &problem,
            Setting::FiniteHorizon,
            n,
            None,
        )
        .unwrap();
        assert!(!yp.averaged && yp.reg.is_none());
        let ty = AlgorithmSpec::preset(
            AlgorithmKind::TarresYao,
            &problem,
            Setting::FiniteHorizon,
            n,
            None,
        )
        .unwrap();
        assert!(!ty.averaged);
        let gl = ty.step.step(3) * ty.reg.lambda(3);
        assert!((gl - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
        let online =
            AlgorithmSpec::preset(AlgorithmKind::Ours, &problem, Setting::Online, n, Some(3.0))
                .unwrap();
        assert_eq!(
            online.step,
            StepSchedule::Online {
                gamma0: 3.0,
                zeta: 0.5
            }
        );
    }

    #[test]
    fn ridge_single_sample() {
        let k = spline(1);
        let e = ridge_solve(&k, &[0.4], &[3.0], 0.5).unwrap();
        assert!((e.weights()[0] - 3.0 / (1.0 / 12.0 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn ridge_singular_at_zero_lambda() {
        let k = spline(1);
        let err = ridge_solve(&k, &[0.4, 0.4], &[1.0, 2.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { dim: 2, .. }), "{err:?}");
        assert!(ridge_solve(&k, &[0.4], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn finite_dim_zero_responses() {
        let stream = vec![(vec![1.0_f64, -2.0], 0.0); 10];
        let out = finite_dim_sgd(&stream, 0.1).unwrap();
        assert!(out.averaged.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn finite_dim_two_steps_by_hand() {
        // d = 1, gamma = 0.5: theta_1 = 0.5*2*1 = 1, theta_2 = 1 - 0.5*(1*2 - 1)*2 = 0
        let stream = vec![(vec![1.0_f64], 2.0), (vec![2.0], 1.0)];
        let out = finite_dim_sgd(&stream, 0.5).unwrap();
        assert_eq!(out.last, vec![0.0]);
        assert!((out.averaged[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn finite_dim_errors() {
        assert!(finite_dim_sgd::<f64>(&[], 0.1).is_err());
        assert!(finite_dim_sgd(&[(vec![1.0], 1.0), (vec![1.0, 2.0], 1.0)], 0.1).is_err());
        let diverging = vec![(vec![10.0_f64], 1.0); 100];
        assert!(matches!(
            finite_dim_sgd(&diverging, 1.0),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn linear_kernel_run_matches_primal() {
        let stream: Vec<(Vec<f64>, f64)> = (0..30)
            .map(|i| {
                let t = i as f64;
                (vec![(0.3 * t).sin(), (0.7 * t).cos()], (0.1 * t).sin())
            })
            .collect();
        let gamma = 0.2;
        let primal = finite_dim_sgd(&stream, gamma).unwrap();
        let k = LinearKernel::new(2);
        let snaps = sgd_run(&k, &stream, &AlgorithmSpec::constant_step(gamma), &[30]).unwrap();
        for probe in [vec![1.0, 0.0], vec![0.0, 1.0], vec![0.3, -2.0]] {
            let dual = snaps[0].averaged.evaluate(&k, &probe);
            let p: f64 = primal.averaged.iter().zip(&probe).map(|(a, b)| a * b).sum();
            assert!((dual - p).abs() < 1e-12);
        }
    }

    #[test]
    fn table_path_matches_kernel_path() {
        let k = spline(1);
        let stream: Vec<(f64, f64)> = (0..40)
            .map(|i| ((i as f64 * 0.618).fract(), (i as f64).cos()))
            .collect();
        let xs: Vec<f64> = stream.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = stream.iter().map(|p| p.1).collect();
        let table = PairTable::new(&k, &xs);
        let spec = AlgorithmSpec {
            kind: AlgorithmKind::TarresYao,
            averaged: true,
            step: StepSchedule::FiniteHorizon { gamma: 2.0 },
            reg: RegularizationSchedule::Constant { lambda: 0.1 },
        };
        let a = sgd_run(&k, &stream, &spec, &[10, 40]).unwrap();
        let b = sgd_run_with_table(&table, &xs, &ys, &spec, &[10, 40]).unwrap();
        assert_eq!(a, b);
        let w = a[1].averaged.weights();
        let naive: f64 = (0..40)
            .flat_map(|i| (0..40).map(move |j| (i, j)))
            .map(|(i, j)| w[i] * w[j] * k.eval(&xs[i], &xs[j]))
            .sum();
        assert!((table.quadratic_form(&w) - naive).abs() < 1e-12);
    }
}
