use ksgd::bernoulli::{bernoulli, bernoulli_fourier_eval, bernoulli_poly, factorial, Rational};
use ksgd::kernels::{
    gram, spline_kernel, spline_kernel_series, Kernel, LinearKernel, PeriodicSplineKernel,
};
use proptest::prelude::*;

fn pi() -> f64 {
    std::f64::consts::PI
}

/// Bound on the truncation tail of the kernel series: `sum_{j > J} 2 (2 pi j)^(-2m)`.
fn series_tail(m: u32, terms: usize) -> f64 {
    2.0 * (2.0 * pi()).powi(-2 * m as i32)
        / ((2 * m - 1) as f64 * (terms as f64).powi(2 * m as i32 - 1))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kernel_matches_series(m in 1u32..=4, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let terms = 20_000;
        let err = (spline_kernel(m, s, t).unwrap() - spline_kernel_series(m, s, t, terms)).abs();
        prop_assert!(err <= series_tail(m, terms) + 1e-13, "m={m}: {err}");
    }

    #[test]
    fn kernel_symmetric_and_periodic(m in 1u32..=4, s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let k = PeriodicSplineKernel::<f64>::new(m).unwrap();
        prop_assert!((k.eval(&s, &t) - k.eval(&t, &s)).abs() < 1e-14);
        prop_assert!((k.eval(&s, &t) - k.eval(&(s + 2.0), &t)).abs() < 1e-13);
        prop_assert!(k.eval(&s, &t) <= k.sup_sq() + 1e-16);
    }

    #[test]
    fn bernoulli_matches_series(k in 2usize..=8, x in 0.0f64..1.0) {
        let err = (bernoulli_poly(k, x) - bernoulli_fourier_eval(k, x, 100_000)).abs();
        prop_assert!(err <= 1e-6, "k={k}, x={x}: {err}");
    }

    #[test]
    fn gram_is_psd(m in 1u32..=4, xs in proptest::collection::vec(0.0f64..1.0, 1..25)) {
        let k = PeriodicSplineKernel::<f64>::new(m).unwrap();
        let g = gram(&k, &xs);
        prop_assert!(g.is_psd(), "min eigenvalue {}", g.min_eigenvalue());
    }

    #[test]
    fn bernoulli_difference_identity(k in 1usize..=10, num in -20i128..20) {
        // B_k(x + 1) - B_k(x) = k x^(k-1)
        let x = Rational::new(num, 7);
        let p = bernoulli(k);
        let lhs = p.eval_exact(x + Rational::from_integer(1)) - p.eval_exact(x);
        let rhs = Rational::from_integer(k as i128) * num_pow(x, k - 1);
        prop_assert_eq!(lhs, rhs);
    }
}

fn num_pow(x: Rational, e: usize) -> Rational {
    (0..e).fold(Rational::from_integer(1), |acc, _| acc * x)
}

#[test]
fn bernoulli_k1_converges_away_from_the_jump() {
    for &x in &[0.05, 0.3, 0.5, 0.77, 0.95] {
        let terms = (1.0 / (pi() * 1e-7 * (pi() * x).sin())) as usize;
        assert!((bernoulli_poly(1, x) - bernoulli_fourier_eval(1, x, terms)).abs() < 1e-6);
    }
    // at the jump the series converges to the midpoint
    assert!(bernoulli_fourier_eval(1, 0.0_f64, 1000).abs() < 1e-15);
}

#[test]
fn kernel_sections_have_zero_mean() {
    // int_0^1 R_m(s, t) dt = 0, checked exactly through the Bernoulli integral
    for m in 1..=4 {
        assert_eq!(bernoulli(2 * m).integral_unit(), Rational::from_integer(0));
        let k = PeriodicSplineKernel::<f64>::new(m as u32).unwrap();
        let n = 4096;
        let mean: f64 = (0..n)
            .map(|i| k.eval(&0.123, &(i as f64 / n as f64)))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 1e-8, "m={m}: {mean}");
    }
}

#[test]
fn order_doubling_identity() {
    // int_0^1 R_m(s, u) R_m(u, t) du = R_2m(s, t)
    let n = 20_000;
    for m in 1..=2u32 {
        let k = PeriodicSplineKernel::<f64>::new(m).unwrap();
        let k2 = k.l2_section_kernel();
        for &(s, t) in &[(0.1, 0.4), (0.0, 0.0), (0.77, 0.21)] {
            let quad: f64 = (0..n)
                .map(|i| {
                    let u = (i as f64 + 0.5) / n as f64;
                    k.eval(&s, &u) * k.eval(&u, &t)
                })
                .sum::<f64>()
                / n as f64;
            assert!((quad - k2.eval(&s, &t)).abs() < 1e-10, "m={m}");
        }
    }
}

#[test]
fn kernel_coefficients_are_scaled_bernoulli() {
    // R_m = (-1)^(m-1) B_2m / (2m)!
    for m in 1..=4u32 {
        let k = PeriodicSplineKernel::<f64>::new(m).unwrap();
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let scale: f64 = 1.0 / ksgd::bernoulli::rational_to::<f64>(factorial(2 * m as usize));
        for &d in &[0.0, 0.25, 0.6] {
            let expect = sign * scale * bernoulli_poly(2 * m as usize, d);
            assert!((k.eval_diff(d) - expect).abs() < 1e-16);
        }
    }
}

#[test]
fn linear_kernel_gram() {
    let k = LinearKernel::<f64>::new(2).with_radius(2.0);
    let xs = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
    let g = gram(&k, &xs);
    assert_eq!(g.matrix()[(0, 1)], 1.0);
    assert_eq!(g.matrix()[(1, 1)], 2.0);
    assert_eq!(k.sup_sq(), 4.0);
}

#[test]
fn single_precision_agrees() {
    for m in 1..=2u32 {
        let a: f32 = spline_kernel(m, 0.3f32, 0.8).unwrap();
        let b: f64 = spline_kernel(m, 0.3f64, 0.8).unwrap();
        assert!((a as f64 - b).abs() < 1e-6);
    }
}
