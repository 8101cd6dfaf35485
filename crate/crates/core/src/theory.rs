//! Closed-form theoretical quantities: optimal step-size exponents, predicted
//! convergence rates, regime classification, the finite-horizon error bound
//! and the spectral constants of the spline testbed.
//!
//! Rates are log-log slopes of the expected excess risk against `n` (so they
//! are negative); step exponents are slopes of `log(gamma)` against `log(n)`.

use std::fmt;
use std::str::FromStr;

use crate::bernoulli::{factorial, rational_to};
use crate::{Error, Result, Scalar};

/// Whether the step size may depend on the total number of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    FiniteHorizon,
    Online,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::FiniteHorizon => "finite_horizon",
            Setting::Online => "online",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fh" | "finite_horizon" => Ok(Setting::FiniteHorizon),
            "online" => Ok(Setting::Online),
            _ => Err(Error::Config(format!("unknown setting '{s}'"))),
        }
    }
}

/// Where `(alpha, r)` sits relative to the optimality thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeClass {
    /// `r < (alpha - 1) / (2 alpha)`: step saturates to a constant, bias dominates.
    BiasDominatedConstantStep,
    /// The rate matches the minimax rate.
    OptimalRegion,
    /// `r` beyond the cap (1 for finite horizon, `(2 alpha - 1)/(2 alpha)` online).
    Saturation,
}

impl fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeClass::BiasDominatedConstantStep => "bias_dominated_constant_step",
            RegimeClass::OptimalRegion => "optimal",
            RegimeClass::Saturation => "saturation",
        })
    }
}

/// Lower threshold `(alpha - 1) / (2 alpha)`.
pub fn lower_threshold<T: Scalar>(alpha: T) -> T {
    (alpha - T::one()) / (alpha + alpha)
}

/// Saturation cap on `r` for a setting.
pub fn saturation_cap<T: Scalar>(alpha: T, setting: Setting) -> T {
    match setting {
        Setting::FiniteHorizon => T::one(),
        Setting::Online => (alpha + alpha - T::one()) / (alpha + alpha),
    }
}

pub fn classify_regime<T: Scalar>(alpha: T, r: T, setting: Setting) -> RegimeClass {
    if r < lower_threshold(alpha) {
        RegimeClass::BiasDominatedConstantStep
    } else if r > saturation_cap(alpha, setting) {
        RegimeClass::Saturation
    } else {
        RegimeClass::OptimalRegion
    }
}

/// Exponent of the optimal constant step `Gamma(n) = gamma0 n^e`.
pub fn step_exponent_finite_horizon<T: Scalar>(alpha: T, r: T) -> T {
    if r < lower_threshold(alpha) {
        return T::zero();
    }
    let x = (alpha + alpha) * r.min(T::one());
    (alpha - x - T::one()) / (x + T::one())
}

/// Exponent of the optimal decreasing step `gamma_n = gamma0 n^e`.
pub fn step_exponent_online<T: Scalar>(alpha: T, r: T) -> T {
    if r < lower_threshold(alpha) {
        T::zero()
    } else if r > saturation_cap(alpha, Setting::Online) {
        T::lit(-0.5)
    } else {
        let x = (alpha + alpha) * r;
        (alpha - x - T::one()) / (x + T::one())
    }
}

/// Predicted log-log slope of the excess risk of the averaged iterate.
pub fn predicted_rate<T: Scalar>(alpha: T, r: T, setting: Setting) -> T {
    if r < lower_threshold(alpha) {
        return -(r + r);
    }
    let x = (alpha + alpha) * r.min(saturation_cap(alpha, setting));
    -x / (x + T::one())
}

/// Rate `-2r/(2r+1)` shared by the capacity-agnostic competitors.
pub fn competitor_rate<T: Scalar>(r: T) -> T {
    -(r + r) / (r + r + T::one())
}

/// Minimax slope `-2 alpha r / (2 alpha r + 1)`, i.e. `-1 + 1/delta`.
pub fn minimax_rate<T: Scalar>(alpha: T, r: T) -> T {
    let x = (alpha + alpha) * r;
    -x / (x + T::one())
}

/// Every constant of the finite-horizon bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams<T> {
    /// Eigenvalue decay exponent, `mu_i <= s^2 / i^alpha`.
    pub alpha: T,
    /// Source-condition exponent.
    pub r: T,
    /// Eigenvalue envelope constant.
    pub s_sq: T,
    /// Noise constant.
    pub sigma_sq: T,
    /// `sup_x K(x, x)`.
    pub r_sq: T,
    /// `||T^(-r) g_H||^2` in L2.
    pub source_norm_sq: T,
}

impl<T: Scalar> BoundParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.alpha,
            self.r,
            self.s_sq,
            self.sigma_sq,
            self.r_sq,
            self.source_norm_sq,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite
            || self.alpha <= T::one()
            || self.r <= T::zero()
            || self.s_sq <= T::zero()
            || self.r_sq <= T::zero()
            || self.sigma_sq < T::zero()
            || self.source_norm_sq < T::zero()
        {
            return Err(Error::Config(format!("invalid bound parameters {self:?}")));
        }
        Ok(())
    }

    /// Residual factor `q = (R^(2 alpha) gamma^(1+alpha) n s^2)^((2r-1)/alpha)`
    /// for `r >= 1/2`, zero otherwise.
    pub fn residual_q(&self, n: usize, gamma: T) -> T {
        let half = T::lit(0.5);
        if self.r < half {
            return T::zero();
        }
        let base = self.r_sq.powf(self.alpha)
            * gamma.powf(T::one() + self.alpha)
            * T::from_usize_lossy(n)
            * self.s_sq;
        base.powf((self.r + self.r - T::one()) / self.alpha)
    }

    /// Variance part `4 sigma^2 / n (1 + (s^2 gamma n)^(1/alpha))`.
    pub fn variance_term(&self, n: usize, gamma: T) -> T {
        let nf = T::from_usize_lossy(n);
        T::lit(4.0) * self.sigma_sq / nf
            * (T::one() + (self.s_sq * gamma * nf).powf(T::one() / self.alpha))
    }

    /// Bias part `4 (1 + q) ||T^-r g||^2 / (gamma^(2r) n^(2 min(r, 1)))`.
    pub fn bias_term(&self, n: usize, gamma: T) -> T {
        let nf = T::from_usize_lossy(n);
        let two_r = self.r + self.r;
        let q = self.residual_q(n, gamma);
        T::lit(4.0) * (T::one() + q) * self.source_norm_sq
            / (gamma.powf(two_r) * nf.powf(two_r.min(T::lit(2.0))))
    }
}

/// Upper bound on the expected excess risk of the averaged iterate after `n`
/// steps with constant step `gamma`; requires `gamma R^2 <= 1/4`.
pub fn finite_horizon_bound<T: Scalar>(n: usize, gamma: T, params: &BoundParams<T>) -> Result<T> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("bound needs n >= 1".into()));
    }
    if !(gamma > T::zero()) || gamma * params.r_sq > T::lit(0.25) {
        return Err(Error::Config(format!(
            "step {gamma} violates gamma * R^2 <= 1/4 (R^2 = {})",
            params.r_sq
        )));
    }
    Ok(params.variance_term(n, gamma) + params.bias_term(n, gamma))
}

/// Eigenvalues of the order-`m` spline covariance operator in non-increasing
/// order, each frequency listed twice.
pub fn spline_eigenvalues<T: Scalar>(m: u32, count: usize) -> Vec<T> {
    (1..=count)
        .map(|i| (T::two_pi() * T::from_usize_lossy(i.div_ceil(2))).powi(-2 * m as i32))
        .collect()
}

/// Smallest `s^2` with `mu_i <= s^2 / i^(2m)` for the paired eigenvalue
/// listing: the supremum is attained on even indices and equals `pi^(-2m)`.
pub fn spectral_s_sq<T: Scalar>(m: u32) -> T {
    T::lit(std::f64::consts::PI).powi(-2 * m as i32)
}

/// Squared L2 mass of the target `B_k` at frequency `j` (cosine and sine
/// parts together): `2 (k!)^2 / (2 pi j)^(2k)`.
fn target_energy<T: Scalar>(k: usize, j: usize) -> T {
    let kf: T = rational_to(factorial(k));
    T::lit(2.0) * kf * kf * (T::two_pi() * T::from_usize_lossy(j)).powi(-2 * k as i32)
}

/// Exponent `p` such that `||T^(-r) B_k||^2 = c * sum_j j^(-p)`.
fn source_exponent<T: Scalar>(m: u32, k: usize, r_eval: T) -> T {
    T::from_usize_lossy(2 * k) - T::lit(4.0 * m as f64) * r_eval
}

/// Partial sum over frequencies `1..=terms` of `||T^(-r_eval) B_k||^2` for the
/// order-`m` spline kernel. Diverges as `terms -> infinity` iff
/// `2k - 4 m r_eval <= 1`.
pub fn source_norm_sq_truncated<T: Scalar>(m: u32, k: usize, r_eval: T, terms: usize) -> T {
    let four_m_r = T::lit(4.0 * m as f64) * r_eval;
    (1..=terms)
        .rev()
        .map(|j| target_energy::<T>(k, j) * (T::two_pi() * T::from_usize_lossy(j)).powf(four_m_r))
        .sum()
}

/// Full series `||T^(-r_eval) B_k||^2`, or `None` when it diverges.
pub fn source_norm_sq<T: Scalar>(m: u32, k: usize, r_eval: T) -> Option<T> {
    let p = source_exponent(m, k, r_eval);
    if p <= T::one() {
        return None;
    }
    let head_terms = 1000;
    let head = source_norm_sq_truncated(m, k, r_eval, head_terms);
    // energy(j) * (2 pi j)^(4 m r) = c * j^(-p)
    let kf: T = rational_to(factorial(k));
    let c = T::lit(2.0) * kf * kf * T::two_pi().powf(-p);
    Some(head + c * power_tail(p, head_terms + 1))
}

/// `sum_{j >= start} j^(-p)` for `p > 1` by Euler-Maclaurin.
pub fn power_tail<T: Scalar>(p: T, start: usize) -> T {
    let n = T::from_usize_lossy(start);
    let one = T::one();
    let two = T::lit(2.0);
    n.powf(one - p) / (p - one) + n.powf(-p) / two + p * n.powf(-p - one) / T::lit(12.0)
        - p * (p + one) * (p + two) * n.powf(-p - T::lit(3.0)) / T::lit(720.0)
}

/// Source exponent from the coefficient-decay identity `delta = 2 alpha r + 1`.
pub fn r_from_delta<T: Scalar>(alpha: T, delta: T) -> T {
    (delta - T::one()) / (alpha + alpha)
}
