//! Quick oracle-equivalence suite behind the `selfcheck` subcommand.

use ksgd::bernoulli::{bernoulli_fourier_eval, bernoulli_poly};
use ksgd::estimator::{
    averaged_coefficients, ridge_solve, sgd_run, AlgorithmSpec, Expansion, KernelExpansion,
};
use ksgd::kernels::{eigen_check, spline_kernel, spline_kernel_series, Basis, Kernel};
use ksgd::risk::{excess_risk_closed, excess_risk_fourier_tail_corrected, excess_risk_mc};
use ksgd::{RegularizationSchedule, SplineKernel, StepSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::sample_stream;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error and its tolerance.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

/// Brute force: materializes every iterate's coefficient vector and
/// averages them, including `g_0 = 0`.
pub fn brute_force_average(inserted: &[f64], shrinks: &[f64]) -> Vec<f64> {
    let n = inserted.len();
    let mut g = vec![0.0; n];
    let mut sum = vec![0.0; n];
    for i in 0..n {
        for c in &mut g[..i] {
            *c *= shrinks[i];
        }
        g[i] = inserted[i];
        for (s, c) in sum.iter_mut().zip(&g) {
            *s += c;
        }
    }
    sum.iter().map(|s| s / (n + 1) as f64).collect()
}

fn kernel_series() -> Check {
    // off-diagonal points only: on the diagonal the truncation tail of the
    // m = 1 series is about 1/(2 pi^2 J)
    let mut worst: f64 = 0.0;
    for m in [1, 2] {
        for a in 0..11 {
            for b in 0..11 {
                if a == b {
                    continue;
                }
                let (s, t) = (a as f64 / 10.0 + 0.013, b as f64 / 10.0);
                let err = spline_kernel(m, s, t).expect("valid order")
                    - spline_kernel_series(m, s, t, 100_000);
                worst = worst.max(err.abs());
            }
        }
    }
    Check::new("kernel equals its Fourier series", worst, 1e-8)
}

fn bernoulli_series() -> Check {
    let mut worst: f64 = 0.0;
    for k in 2..=6 {
        for i in 1..20 {
            let x = i as f64 / 20.0;
            worst = worst.max((bernoulli_poly(k, x) - bernoulli_fourier_eval(k, x, 100_000)).abs());
        }
    }
    Check::new(
        "Bernoulli polynomials equal their Fourier series",
        worst,
        1e-6,
    )
}

fn spectral() -> Check {
    let mut worst: f64 = 0.0;
    for m in [1, 2] {
        for i in 1..=5 {
            let mu = SplineKernel::new(m).expect("valid order").eigenvalue(i);
            for basis in [Basis::Cos, Basis::Sin] {
                for q in 0..16 {
                    let s = q as f64 / 16.0 + 0.003;
                    let (lhs, rhs) = eigen_check(m, i, s, 10_000, basis).expect("valid input");
                    worst = worst.max((lhs - rhs).abs() / (mu * std::f64::consts::SQRT_2));
                }
            }
        }
    }
    Check::new(
        "Fourier basis diagonalizes the covariance operator",
        worst,
        1e-6,
    )
}

fn random_expansion(rng: &mut ChaCha8Rng, len: usize) -> KernelExpansion<f64, f64> {
    let centers = (0..len).map(|_| rng.random::<f64>()).collect();
    let coeffs = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    KernelExpansion::from_parts(centers, coeffs).expect("matching lengths")
}

fn risk_oracles() -> (Check, Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut fourier, mut quad): (f64, f64) = (0.0, 0.0);
    for &(m, k) in &[(1, 2), (2, 2), (1, 3), (2, 1)] {
        let e = random_expansion(&mut rng, 8);
        let closed: f64 = excess_risk_closed(&e, m, k).expect("valid orders");
        fourier = fourier.max(
            (closed - excess_risk_fourier_tail_corrected(&e, m, k, 20_000).expect("valid")).abs(),
        );
        quad = quad.max((closed - excess_risk_mc(&e, m, k, 20_000).expect("valid")).abs());
    }
    (
        Check::new("closed-form risk matches the Fourier oracle", fourier, 1e-8),
        Check::new("closed-form risk matches quadrature", quad, 1e-5),
    )
}

fn averaging() -> Check {
    let kernel = SplineKernel::new(1).expect("valid order");
    let stream = sample_stream(3, 2, 0.1, 120);
    let mut worst: f64 = 0.0;
    for reg in [
        RegularizationSchedule::None,
        RegularizationSchedule::Constant { lambda: 0.2 },
    ] {
        let spec = AlgorithmSpec {
            step: StepSchedule::Online {
                gamma0: 3.0,
                zeta: 0.5,
            },
            reg,
            ..AlgorithmSpec::constant_step(1.0)
        };
        let snaps = sgd_run(&kernel, &stream, &spec, &[stream.len()]).expect("stable run");
        // recover what was inserted at each step from the last iterate
        let n = stream.len();
        let shrinks: Vec<f64> = (1..=n)
            .map(|i| 1.0 - spec.step.step(i) * spec.reg.lambda(i))
            .collect();
        let last = snaps[0].last.weights();
        let mut inserted = last.clone();
        let mut tail = 1.0;
        for i in (0..n).rev() {
            inserted[i] = last[i] / tail;
            tail *= shrinks[i];
        }
        let fast = averaged_coefficients(&inserted, &shrinks).expect("matching lengths");
        let slow = brute_force_average(&inserted, &shrinks);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in snaps[0].averaged.coeffs().iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    Check::new(
        "averaged coefficients match brute-force averaging",
        worst,
        1e-12,
    )
}

fn ridge() -> Check {
    let kernel = SplineKernel::new(1).expect("valid order");
    let stream = sample_stream(9, 2, 0.1, 200);
    let (xs, ys): (Vec<f64>, Vec<f64>) = stream.into_iter().unzip();
    let lambda = 1e-3;
    let sol = ridge_solve(&kernel, &xs, &ys, lambda).expect("regularized system is solvable");
    let a = sol.weights();
    let worst = xs
        .iter()
        .zip(&ys)
        .enumerate()
        .map(|(i, (xi, yi))| {
            let ka: f64 = xs
                .iter()
                .zip(&a)
                .map(|(xj, aj)| kernel.eval(xi, xj) * aj)
                .sum();
            (ka + lambda * a[i] - yi).abs()
        })
        .fold(0.0, f64::max);
    Check::new("ridge solution solves the regularized system", worst, 1e-8)
}

/// Runs every check; takes a few seconds.
pub fn run_selfcheck() -> Vec<Check> {
    let (fourier, quad) = risk_oracles();
    vec![
        kernel_series(),
        bernoulli_series(),
        spectral(),
        fourier,
        quad,
        averaging(),
        ridge(),
    ]
}
