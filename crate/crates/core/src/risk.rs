//! Excess risk `||f - g_rho||^2_{L2}` on the spline testbed.
//!
//! With uniform inputs on the circle, kernel target `g_rho = B_k` and an
//! expansion `f = sum_i w_i K_{x_i}` of the order-`m` spline kernel,
//!
//! ```text
//! ||f - B_k||^2 = sum_ij w_i w_j R_2m(x_i, x_j) - 2 sum_i w_i c(x_i) + ||B_k||^2
//! c(x) = <K_x, B_k> = (-1)^m k! / (2m + k)! * B_{2m+k}({x})
//! ||B_k||^2 = int_0^1 B_k(x)^2 dx
//! ```
//!
//! All three pieces come from the Fourier expansions of the kernel and the
//! Bernoulli polynomials. The truncated-Fourier and quadrature evaluators
//! below are independent checks of the closed form.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use num_traits::Zero;

use crate::bernoulli::{bernoulli, factorial, frac, horner, rational_to, Rational, MAX_DEGREE};
use crate::estimator::{Expansion, PairTable};
use crate::kernels::{Kernel, PeriodicSplineKernel};
use crate::theory::power_tail;
use crate::{Error, Result, Scalar};

/// Regression function `g_rho = B_k` on `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction<T> {
    k: usize,
    coeffs: Vec<T>,
    norm_sq: T,
}

impl<T: Scalar> TargetFunction<T> {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_DEGREE / 2 {
            return Err(Error::Config(format!(
                "target index k = {k} outside 1..={}",
                MAX_DEGREE / 2
            )));
        }
        Ok(Self {
            k,
            coeffs: bernoulli(k).scaled_coeffs(Rational::from_integer(1)),
            norm_sq: rational_to(target_norm_sq_exact(k)),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Coefficient-decay exponent `delta = 2k`.
    pub fn delta(&self) -> usize {
        2 * self.k
    }

    /// `B_k(x)` for `x` in `[0, 1)`; other inputs are evaluated as a polynomial.
    #[inline]
    pub fn eval(&self, x: T) -> T {
        horner(&self.coeffs, x)
    }

    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }
}

/// `int_0^1 B_k(x)^2 dx` in exact arithmetic.
pub fn target_norm_sq_exact(k: usize) -> Rational {
    let c = bernoulli(k).coeffs();
    let mut total = Rational::zero();
    for (i, &ci) in c.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            total += ci * cj / Rational::from_integer((i + j + 1) as i128);
        }
    }
    total
}

pub fn target_norm_sq<T: Scalar>(k: usize) -> T {
    rational_to(target_norm_sq_exact(k))
}

/// Closed-form evaluator for one kernel order and target.
#[derive(Debug, Clone)]
pub struct RiskEvaluator<T> {
    kernel: PeriodicSplineKernel<T>,
    l2_kernel: PeriodicSplineKernel<T>,
    cross: Vec<T>,
    target: TargetFunction<T>,
}

impl<T: Scalar> RiskEvaluator<T> {
    pub fn new(m: u32, k: usize) -> Result<Self> {
        let kernel = PeriodicSplineKernel::new(m)?;
        let target = TargetFunction::new(k)?;
        let deg = 2 * m as usize + k;
        if deg > MAX_DEGREE {
            return Err(Error::Config(format!(
                "kernel order {m} with target index {k} needs B_{deg}, beyond the table"
            )));
        }
        let sign: i128 = if m.is_multiple_of(2) { 1 } else { -1 };
        let factor = Ratio::from_integer(sign) * factorial(k) / factorial(deg);
        Ok(Self {
            l2_kernel: kernel.l2_section_kernel(),
            kernel,
            cross: bernoulli(deg).scaled_coeffs(factor),
            target,
        })
    }

    pub fn kernel(&self) -> &PeriodicSplineKernel<T> {
        &self.kernel
    }

    /// Kernel computing `<K_x, K_y>_{L2}`.
    pub fn l2_kernel(&self) -> &PeriodicSplineKernel<T> {
        &self.l2_kernel
    }

    pub fn target(&self) -> &TargetFunction<T> {
        &self.target
    }

    /// `<K_x, B_k>_{L2}`.
    #[inline]
    pub fn kernel_target_inner(&self, x: T) -> T {
        horner(&self.cross, frac(x))
    }

    pub fn excess_risk<E: Expansion<T, T>>(&self, expansion: &E) -> T {
        self.excess_risk_weights(expansion.centers(), &expansion.weights())
    }

    pub fn excess_risk_weights(&self, centers: &[T], weights: &[T]) -> T {
        let mut quad = T::zero();
        for (i, (&xi, &wi)) in centers.iter().zip(weights).enumerate() {
            let off: T = centers[..i]
                .iter()
                .zip(weights)
                .map(|(&xj, &wj)| wj * self.l2_kernel.eval(&xi, &xj))
                .sum();
            quad += wi * (off + off + wi * self.l2_kernel.sup_sq());
        }
        quad - self.cross_term(centers, weights) + self.target.norm_sq()
    }

    /// Same as [`Self::excess_risk_weights`], reading `R_2m` values from a table
    /// built with [`Self::l2_kernel`] over (a superset prefix of) `centers`.
    pub fn excess_risk_with_table(
        &self,
        l2_table: &PairTable<T>,
        centers: &[T],
        weights: &[T],
    ) -> T {
        l2_table.quadratic_form(weights) - self.cross_term(centers, weights) + self.target.norm_sq()
    }

    fn cross_term(&self, centers: &[T], weights: &[T]) -> T {
        let lin: T = centers
            .iter()
            .zip(weights)
            .map(|(&x, &w)| w * self.kernel_target_inner(x))
            .sum();
        lin + lin
    }
}

/// `<K_x, B_k>_{L2}` for the order-`m` spline kernel.
pub fn kernel_target_inner<T: Scalar>(m: u32, k: usize, x: T) -> Result<T> {
    Ok(RiskEvaluator::new(m, k)?.kernel_target_inner(x))
}

/// Closed-form excess risk of an expansion of the order-`m` spline kernel
/// against the target `B_k`. `O(n^2)`.
pub fn excess_risk_closed<T: Scalar, E: Expansion<T, T>>(
    expansion: &E,
    m: u32,
    k: usize,
) -> Result<T> {
    Ok(RiskEvaluator::new(m, k)?.excess_risk(expansion))
}

/// Fourier coordinates of `B_k` on `sqrt(2) cos(2 pi j .)`, `sqrt(2) sin(2 pi j .)`.
fn target_coordinates<T: Scalar>(k: usize, j: usize) -> (T, T) {
    let kf: T = rational_to(factorial(k));
    let amp = -T::lit(std::f64::consts::SQRT_2) * kf
        / (T::two_pi() * T::from_usize_lossy(j)).powi(k as i32);
    let phase = T::lit(k as f64 * std::f64::consts::FRAC_PI_2);
    (amp * phase.cos(), amp * phase.sin())
}

/// Sum over frequencies `1..=terms` of the squared coordinate differences
/// between the expansion and `B_k` in the Fourier eigenbasis.
pub fn excess_risk_fourier<T: Scalar, E: Expansion<T, T>>(
    expansion: &E,
    m: u32,
    k: usize,
    terms: usize,
) -> Result<T> {
    PeriodicSplineKernel::<T>::new(m)?;
    TargetFunction::<T>::new(k)?;
    if terms == 0 {
        return Err(Error::InvalidInput("need at least one frequency".into()));
    }
    let centers = expansion.centers();
    let weights = expansion.weights();
    // rotate (cos, sin)(2 pi j x_i) frequency by frequency, resynchronizing
    // periodically to bound the accumulated rounding
    let base: Vec<(T, T)> = centers
        .iter()
        .map(|&x| {
            let a = T::two_pi() * frac(x);
            (a.cos(), a.sin())
        })
        .collect();
    let mut cur = base.clone();
    let sqrt2 = T::lit(std::f64::consts::SQRT_2);
    let mut total = T::zero();
    for j in 1..=terms {
        if j > 1 {
            if j % 256 == 0 {
                for (c, &x) in cur.iter_mut().zip(centers) {
                    let a = T::two_pi() * frac(T::from_usize_lossy(j) * frac(x));
                    *c = (a.cos(), a.sin());
                }
            } else {
                for (c, &(bc, bs)) in cur.iter_mut().zip(&base) {
                    *c = (c.0 * bc - c.1 * bs, c.1 * bc + c.0 * bs);
                }
            }
        }
        let mu = sqrt2 * (T::two_pi() * T::from_usize_lossy(j)).powi(-2 * m as i32);
        let (mut a, mut b) = (T::zero(), T::zero());
        for (&(c, s), &w) in cur.iter().zip(&weights) {
            a += w * c;
            b += w * s;
        }
        let (tc, ts) = target_coordinates::<T>(k, j);
        let (da, db) = (mu * a - tc, mu * b - ts);
        total += da * da + db * db;
    }
    Ok(total)
}

/// [`excess_risk_fourier`] plus the target's own energy beyond `terms`
/// (Euler-Maclaurin tail of `2 (k!)^2 sum_{j > terms} (2 pi j)^(-2k)`).
/// The omitted cross terms decay like `terms^(1 - 2m - k)`.
pub fn excess_risk_fourier_tail_corrected<T: Scalar, E: Expansion<T, T>>(
    expansion: &E,
    m: u32,
    k: usize,
    terms: usize,
) -> Result<T> {
    let head = excess_risk_fourier(expansion, m, k, terms)?;
    let kf: T = rational_to(factorial(k));
    let p = T::from_usize_lossy(2 * k);
    let tail = T::lit(2.0) * kf * kf * T::two_pi().powf(-p) * power_tail(p, terms + 1);
    Ok(head + tail)
}

/// Trapezoid rule for `int_0^1 (f(x) - B_k(x))^2 dx` on `grid_size` uniform
/// intervals.
pub fn excess_risk_mc<T: Scalar, E: Expansion<T, T>>(
    expansion: &E,
    m: u32,
    k: usize,
    grid_size: usize,
) -> Result<T> {
    if grid_size < 1000 {
        return Err(Error::InvalidInput(format!(
            "quadrature needs at least 1000 intervals, got {grid_size}"
        )));
    }
    let kernel = PeriodicSplineKernel::<T>::new(m)?;
    let target = TargetFunction::<T>::new(k)?;
    let centers = expansion.centers();
    let weights = expansion.weights();
    let nf = T::from_usize_lossy(grid_size);
    let sq_err = |q: usize| {
        let x = T::from_usize_lossy(q) / nf;
        let f: T = centers
            .iter()
            .zip(&weights)
            .map(|(c, &w)| w * kernel.eval(c, &x))
            .sum();
        let d = f - target.eval(x);
        d * d
    };
    let half = T::lit(0.5);
    let interior: T = (1..grid_size).map(sq_err).sum();
    Ok((interior + half * (sq_err(0) + sq_err(grid_size))) / nf)
}

/// `(theta - theta_star)^T Sigma (theta - theta_star)`.
pub fn excess_risk_finite_dim<T: Scalar>(
    theta: &[T],
    theta_star: &[T],
    covariance: &DMatrix<T>,
) -> Result<T> {
    let d = theta.len();
    if theta_star.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: theta_star.len(),
        });
    }
    if covariance.nrows() != d || covariance.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: covariance.nrows().max(covariance.ncols()),
        });
    }
    let diff = DVector::from_iterator(d, theta.iter().zip(theta_star).map(|(&a, &b)| a - b));
    Ok(diff.dot(&(covariance * &diff)))
}

/// Which evaluator produced a [`RiskReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMethod {
    Closed,
    Fourier,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport<T> {
    pub excess_risk: T,
    pub method: RiskMethod,
}

impl<T: Scalar> RiskReport<T> {
    /// Clamps round-off negatives (down to `-1e-12`) to zero.
    pub fn new(value: T, method: RiskMethod) -> Result<Self> {
        if value < T::lit(-1e-12) || value.is_nan() {
            return Err(Error::InvalidInput(format!(
                "excess risk {value} is negative beyond round-off"
            )));
        }
        Ok(Self {
            excess_risk: value.max(T::zero()),
            method,
        })
    }
}
