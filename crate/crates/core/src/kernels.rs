//! Reproducing kernels: periodic splines on the circle and the linear kernel.

use nalgebra::{DMatrix, RealField};
use num_rational::Ratio;

use crate::bernoulli::{bernoulli, factorial, frac, horner, MAX_DEGREE};
use crate::{Error, Result, Scalar};

/// A positive-definite kernel over some point type.
pub trait Kernel<T: Scalar>: Sync {
    type Point: Clone + Send + Sync;

    fn eval(&self, a: &Self::Point, b: &Self::Point) -> T;

    /// `sup_x K(x, x)`.
    fn sup_sq(&self) -> T;
}

/// Spline kernel of order `m` on the circle:
/// `R_m(s, t) = (-1)^(m-1) / (2m)! * B_2m({s - t})`.
///
/// Its covariance operator under the uniform law has eigenvalues
/// `(2 pi i)^(-2m)`, each of multiplicity two, so the decay exponent is `2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSplineKernel<T> {
    order: u32,
    // Horner coefficients of the scaled B_2m
    coeffs: Vec<T>,
}

impl<T: Scalar> PeriodicSplineKernel<T> {
    pub const SUPPORTED_ORDERS: std::ops::RangeInclusive<u32> = 1..=4;

    pub fn new(order: u32) -> Result<Self> {
        if !Self::SUPPORTED_ORDERS.contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self::build(order))
    }

    fn build(order: u32) -> Self {
        let m = order as usize;
        debug_assert!(2 * m <= MAX_DEGREE);
        let sign: i128 = if m % 2 == 1 { 1 } else { -1 };
        let factor = Ratio::from_integer(sign) / factorial(2 * m);
        Self {
            order,
            coeffs: bernoulli(2 * m).scaled_coeffs(factor),
        }
    }

    /// Kernel whose values are the L2 inner products of sections of `self`:
    /// `<K_x, K_y>_{L2} = R_2m(x, y)`.
    pub fn l2_section_kernel(&self) -> Self {
        Self::build(2 * self.order)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Eigenvalue decay exponent `alpha = 2m`.
    pub fn alpha(&self) -> T {
        T::from_u32(2 * self.order).unwrap()
    }

    /// Kernel value as a function of the (periodic) difference `s - t`.
    #[inline]
    pub fn eval_diff(&self, d: T) -> T {
        horner(&self.coeffs, frac(d))
    }

    /// `i`-th eigenvalue `(2 pi i)^(-2m)` (each one appears twice).
    pub fn eigenvalue(&self, i: usize) -> T {
        (T::two_pi() * T::from_usize_lossy(i)).powi(-2 * self.order as i32)
    }
}

impl<T: Scalar> Kernel<T> for PeriodicSplineKernel<T> {
    type Point = T;

    #[inline]
    fn eval(&self, s: &T, t: &T) -> T {
        self.eval_diff(*s - *t)
    }

    fn sup_sq(&self) -> T {
        self.coeffs[0]
    }
}

/// `R_m(s, t)` for `m` in `1..=4`.
pub fn spline_kernel<T: Scalar>(m: u32, s: T, t: T) -> Result<T> {
    Ok(PeriodicSplineKernel::new(m)?.eval(&s, &t))
}

/// Partial sum `sum_{j <= terms} 2 (2 pi j)^(-2m) cos(2 pi j (s - t))`.
pub fn spline_kernel_series<T: Scalar>(m: u32, s: T, t: T, terms: usize) -> T {
    let d = frac(s - t);
    let two_pi = T::two_pi();
    let two = T::lit(2.0);
    (1..=terms).rev().fold(T::zero(), |acc, j| {
        let w = two_pi * T::from_usize_lossy(j);
        acc + two * (w * d).cos() / w.powi(2 * m as i32)
    })
}

/// `R_m(0, 0)`, the `R^2` constant of the spline kernel.
pub fn kernel_sup_sq<T: Scalar>(m: u32) -> Result<T> {
    Ok(PeriodicSplineKernel::<T>::new(m)?.sup_sq())
}

/// Linear kernel `K(u, v) = <u, v>` on `R^d`, optionally restricted to a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearKernel<T> {
    dim: usize,
    radius: Option<T>,
}

impl<T: Scalar> LinearKernel<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, radius: None }
    }

    /// Declares that inputs satisfy `||x|| <= radius`.
    pub fn with_radius(mut self, radius: T) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl<T: Scalar> Kernel<T> for LinearKernel<T> {
    type Point = Vec<T>;

    #[inline]
    fn eval(&self, a: &Vec<T>, b: &Vec<T>) -> T {
        debug_assert_eq!(a.len(), self.dim);
        a.iter().zip(b).map(|(&u, &v)| u * v).sum()
    }

    /// `radius^2`, or infinity when the inputs are unbounded.
    fn sup_sq(&self) -> T {
        self.radius.map_or(T::infinity(), |r| r * r)
    }
}

/// Symmetric matrix of pairwise kernel evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<T: Scalar> {
    matrix: DMatrix<T>,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> T {
        self.matrix.diagonal().iter().copied().sum()
    }
}

impl<T: Scalar + RealField> GramMatrix<T> {
    pub fn min_eigenvalue(&self) -> T {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| if b < a { b } else { a })
    }

    /// Minimum eigenvalue no smaller than `-1e-9 * trace`.
    pub fn is_psd(&self) -> bool {
        let tol = T::lit(1e-9) * num_traits::Float::abs(self.trace());
        self.min_eigenvalue() >= -tol
    }
}

pub fn gram<T: Scalar, K: Kernel<T>>(kernel: &K, xs: &[K::Point]) -> GramMatrix<T> {
    let n = xs.len();
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&xs[i], &xs[j]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    GramMatrix { matrix }
}

/// Which member of an eigenpair `sqrt(2) cos(2 pi i t)` / `sqrt(2) sin(2 pi i t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Cos,
    Sin,
}

impl Basis {
    fn eval<T: Scalar>(self, i: usize, t: T) -> T {
        let arg = T::two_pi() * T::from_usize_lossy(i) * t;
        let v = match self {
            Basis::Cos => arg.cos(),
            Basis::Sin => arg.sin(),
        };
        T::lit(std::f64::consts::SQRT_2) * v
    }
}

/// Numerically applies the covariance operator to the `i`-th Fourier
/// eigenfunction at `s`, using the periodic trapezoid rule with
/// `quad_points` nodes. Returns `(T phi_i (s), mu_i phi_i (s))`.
pub fn eigen_check<T: Scalar>(
    m: u32,
    i: usize,
    s: T,
    quad_points: usize,
    basis: Basis,
) -> Result<(T, T)> {
    if i == 0 {
        return Err(Error::InvalidInput("eigen index must be >= 1".into()));
    }
    if quad_points < 1000 {
        return Err(Error::InvalidInput(format!(
            "eigen_check needs at least 1000 quadrature points, got {quad_points}"
        )));
    }
    let kernel = PeriodicSplineKernel::<T>::new(m)?;
    let nq = T::from_usize_lossy(quad_points);
    let lhs = (0..quad_points)
        .map(|q| {
            let t = T::from_usize_lossy(q) / nq;
            kernel.eval(&s, &t) * basis.eval(i, t)
        })
        .sum::<T>()
        / nq;
    let rhs = kernel.eigenvalue(i) * basis.eval(i, s);
    Ok((lhs, rhs))
}
