//! Bernoulli numbers and polynomials with exact rational coefficients.
//!
//! The coefficient table is built once by the standard recurrence and shared
//! by every kernel and target function in the crate. Evaluation converts the
//! exact coefficients to the requested floating-point type.

use std::sync::OnceLock;

use num_integer::binomial;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::Scalar;

/// Exact rational used for Bernoulli coefficients.
pub type Rational = Ratio<i128>;

/// Largest polynomial degree held in the shared table.
pub const MAX_DEGREE: usize = 16;

/// Bernoulli numbers `b_0 ..= b_max_n` with the convention `b_1 = -1/2`.
pub fn bernoulli_numbers(max_n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(max_n + 1);
    b.push(Rational::one());
    for n in 1..=max_n {
        // sum_{j=0}^{n} C(n+1, j) b_j = 0
        let partial = (0..n).fold(Rational::zero(), |acc, j| {
            acc + b[j] * Rational::from_integer(binomial(n as i128 + 1, j as i128))
        });
        b.push(-partial / Rational::from_integer(n as i128 + 1));
    }
    b
}

/// The degree-`n` Bernoulli polynomial, `B_n(x) = sum_j C(n, j) b_{n-j} x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliPoly {
    degree: usize,
    coeffs: Vec<Rational>,
}

impl BernoulliPoly {
    /// Builds `B_n` from scratch. Use [`bernoulli`] for the cached table.
    pub fn new(degree: usize) -> Self {
        let b = bernoulli_numbers(degree);
        let coeffs = (0..=degree)
            .map(|j| Rational::from_integer(binomial(degree as i128, j as i128)) * b[degree - j])
            .collect();
        Self { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `x^j` for `j = 0..=degree`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn eval_exact(&self, x: Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, &c| acc * x + c)
    }

    /// `int_0^1 B_n(x) dx`, exactly. Zero for every `n >= 1`.
    pub fn integral_unit(&self) -> Rational {
        self.coeffs
            .iter()
            .enumerate()
            .fold(Rational::zero(), |acc, (j, &c)| {
                acc + c / Rational::from_integer(j as i128 + 1)
            })
    }

    /// Coefficients converted to floating point, each multiplied by `factor`.
    pub fn scaled_coeffs<T: Scalar>(&self, factor: Rational) -> Vec<T> {
        self.coeffs
            .iter()
            .map(|&c| rational_to(c * factor))
            .collect()
    }

    pub fn eval<T: Scalar>(&self, x: T) -> T {
        let c: Vec<T> = self.scaled_coeffs(Rational::one());
        horner(&c, x)
    }
}

/// Shared table of `B_0 ..= B_MAX_DEGREE`.
///
/// # Panics
///
/// If `k > MAX_DEGREE`.
pub fn bernoulli(k: usize) -> &'static BernoulliPoly {
    static TABLE: OnceLock<Vec<BernoulliPoly>> = OnceLock::new();
    assert!(
        k <= MAX_DEGREE,
        "Bernoulli polynomial degree {k} exceeds table size {MAX_DEGREE}"
    );
    &TABLE.get_or_init(|| (0..=MAX_DEGREE).map(BernoulliPoly::new).collect())[k]
}

pub fn rational_to<T: Scalar>(q: Rational) -> T {
    // numerators and denominators of the table entries fit an f64 mantissa comfortably
    T::lit(q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN))
}

/// `n!` as an exact rational.
pub fn factorial(n: usize) -> Rational {
    (1..=n as i128).fold(Rational::one(), |acc, i| acc * Rational::from_integer(i))
}

#[inline]
pub fn horner<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Value of `B_k` at `x`, evaluated as a polynomial (not periodized).
pub fn bernoulli_poly<T: Scalar>(k: usize, x: T) -> T {
    bernoulli(k).eval(x)
}

/// Fractional part `x - floor(x)`, always in `[0, 1)`.
#[inline]
pub fn frac<T: Scalar>(x: T) -> T {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1
    if f >= T::one() {
        T::zero()
    } else {
        f
    }
}

/// Partial sum up to frequency `terms` of the Fourier series of the 1-periodic
/// extension of `B_k`: `-2 k! sum_j cos(2 pi j x - k pi / 2) / (2 pi j)^k`.
pub fn bernoulli_fourier_eval<T: Scalar>(k: usize, x: T, terms: usize) -> T {
    let two_pi = T::two_pi();
    let phase = T::lit(k as f64 * std::f64::consts::FRAC_PI_2);
    let xf = frac(x);
    let kf: T = rational_to(factorial(k));
    // small terms first
    let sum = (1..=terms).rev().fold(T::zero(), |acc, j| {
        let w = two_pi * T::from_usize_lossy(j);
        acc + (w * xf - phase).cos() / w.powi(k as i32)
    });
    -(kf + kf) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn first_bernoulli_numbers() {
        let b = bernoulli_numbers(1);
        assert_eq!(b, vec![q(1, 1), q(-1, 2)]);
        let b = bernoulli_numbers(8);
        assert_eq!(b[2], q(1, 6));
        assert_eq!(b[3], q(0, 1));
        assert_eq!(b[4], q(-1, 30));
        assert_eq!(b[6], q(1, 42));
        assert_eq!(b[8], q(-1, 30));
    }

    #[test]
    fn numbers_satisfy_recurrence() {
        let b = bernoulli_numbers(MAX_DEGREE);
        for n in 1..=MAX_DEGREE {
            let s = (0..=n).fold(Rational::zero(), |acc, j| {
                acc + b[j] * Rational::from_integer(binomial(n as i128 + 1, j as i128))
            });
            assert!(s.is_zero(), "recurrence fails at n = {n}");
        }
    }

    #[test]
    fn low_degree_polynomials_match_closed_forms() {
        assert_eq!(bernoulli(1).coeffs(), &[q(-1, 2), q(1, 1)]);
        assert_eq!(bernoulli(2).coeffs(), &[q(1, 6), q(-1, 1), q(1, 1)]);
        assert_eq!(
            bernoulli(3).coeffs(),
            &[q(0, 1), q(1, 2), q(-3, 2), q(1, 1)]
        );
    }

    #[test]
    fn table_invariants() {
        for n in 1..=MAX_DEGREE {
            let p = bernoulli(n);
            assert_eq!(p.degree(), n);
            assert_eq!(*p.coeffs().last().unwrap(), Rational::one(), "B_{n} monic");
            assert!(p.integral_unit().is_zero(), "B_{n} has zero mean");
            if n >= 2 {
                assert_eq!(
                    p.eval_exact(q(0, 1)),
                    p.eval_exact(q(1, 1)),
                    "B_{n}(0) = B_{n}(1)"
                );
            }
        }
    }

    #[test]
    fn poly_values() {
        assert_eq!(bernoulli_poly(1, 0.0_f64), -0.5);
        assert!((bernoulli_poly(2, 0.0_f64) - 1.0 / 6.0).abs() < 1e-16);
        assert!(bernoulli_poly(3, 0.5_f64).abs() < 1e-16);
        assert!((bernoulli_poly(2, 0.25_f32) - (-1.0 / 48.0)).abs() < 1e-7);
    }

    #[test]
    fn frac_examples() {
        assert_eq!(frac(0.25_f64), 0.25);
        assert_eq!(frac(-0.25_f64), 0.75);
        assert_eq!(frac(3.0_f64), 0.0);
        assert_eq!(frac(-1e-20_f64), 0.0);
        assert_eq!(frac(-3.0_f64), 0.0);
    }

    #[test]
    fn fourier_examples() {
        let v = bernoulli_fourier_eval(2, 0.3_f64, 100_000);
        assert!((v - bernoulli_poly(2, 0.3)).abs() < 1e-8);
        let v = bernoulli_fourier_eval(3, 0.2_f64, 100_000);
        assert!((v - bernoulli_poly(3, 0.2)).abs() < 1e-9);
        for terms in [1, 7, 1000] {
            assert!(bernoulli_fourier_eval(1, 0.5_f64, terms).abs() < 1e-12);
        }
    }

    #[test]
    #[should_panic]
    fn degree_beyond_table_panics() {
        let _ = bernoulli(MAX_DEGREE + 1);
    }
}
