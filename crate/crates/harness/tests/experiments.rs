use ksgd::estimator::AlgorithmKind;
use ksgd::theory::Setting;
use ksgd_harness::csvio::{
    read_comparison, read_simulation, read_sweep, write_comparison, write_simulation, write_sweep,
};
use ksgd_harness::data::log_grid;
use ksgd_harness::experiment::{checkpoints_for, run_with, ComparisonRow, StepPolicy};
use ksgd_harness::{fit_rate, gamma_sweep, run_replicates, ExperimentConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n_max: 300,
        n_checkpoints: 6,
        replicates: 6,
        master_seed: seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = small(3);
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let wide = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = serial.install(|| run_replicates(&cfg).unwrap());
    let b = wide.install(|| run_replicates(&cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn replicates_are_independent_of_the_count() {
    // replicate j has the same stream whether 3 or 6 replicates run
    let six = run_replicates(&small(1)).unwrap();
    let three = run_replicates(&ExperimentConfig {
        replicates: 3,
        ..small(1)
    })
    .unwrap();
    assert_eq!(&six.per_replicate[..3], &three.per_replicate[..]);
    // reversing the order of summation changes the mean by rounding only
    let rev: Vec<f64> = (0..six.checkpoints.len())
        .map(|c| six.per_replicate.iter().rev().map(|r| r[c]).sum::<f64>() / 6.0)
        .collect();
    for (a, b) in six.mean.iter().zip(&rev) {
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }
}

#[test]
fn simulation_csv_round_trip() {
    let res = run_replicates(&small(2)).unwrap();
    let mut buf = Vec::new();
    write_simulation(&mut buf, &res).unwrap();
    let rows = read_simulation(buf.as_slice()).unwrap();
    for (n, j, v) in rows {
        let c = res.checkpoints.iter().position(|&m| m == n).unwrap();
        let want = res.per_replicate[j][c];
        assert!((v - want).abs() <= 1e-12 * want.abs());
    }
}

#[test]
fn sweep_and_comparison_csv_round_trip() {
    let cfg = small(4);
    let sweep = gamma_sweep(&cfg, &[1.0, 3.0], &checkpoints_for(&cfg)).unwrap();
    let mut buf = Vec::new();
    write_sweep(&mut buf, &sweep.points).unwrap();
    let back = read_sweep(buf.as_slice()).unwrap();
    for (a, b) in sweep.points.iter().zip(&back) {
        assert_eq!(a.n, b.n);
        assert!((a.best_gamma - b.best_gamma).abs() <= 1e-12 * a.best_gamma);
        assert!((a.mean_excess_risk - b.mean_excess_risk).abs() <= 1e-12 * a.mean_excess_risk);
    }
    let rows = vec![ComparisonRow {
        algorithm: AlgorithmKind::YingPontil,
        predicted_slope: -2.5 / 3.5,
        effective_slope: -0.6312345678901234,
        residual_rms: 0.04,
    }];
    let mut buf = Vec::new();
    write_comparison(&mut buf, &rows).unwrap();
    let back = read_comparison(buf.as_slice()).unwrap();
    assert_eq!(back[0].algorithm, AlgorithmKind::YingPontil);
    assert!((back[0].predicted_slope - rows[0].predicted_slope).abs() < 1e-15);
    assert!((back[0].effective_slope - rows[0].effective_slope).abs() < 1e-15);
}

#[test]
fn noiseless_sweep_prefers_the_largest_step() {
    let cfg = ExperimentConfig {
        noise_sigma: 0.0,
        ..small(5)
    };
    let grid = log_grid(0.1, 3.0, 6);
    let sweep = gamma_sweep(&cfg, &grid, &checkpoints_for(&cfg)).unwrap();
    for p in &sweep.points {
        assert_eq!(p.best_gamma, grid[5], "n = {}", p.n);
    }
}

#[test]
fn noiseless_risk_decreases_in_n() {
    let cfg = ExperimentConfig {
        noise_sigma: 0.0,
        target_index_k: 1,
        n_max: 1000,
        n_checkpoints: 8,
        ..small(6)
    };
    let res = run_with(&cfg, StepPolicy::Constant(3.0), &checkpoints_for(&cfg)).unwrap();
    for w in res.mean.windows(2) {
        assert!(w[1] <= w[0] * 1.05, "{:?}", res.mean);
    }
    let preset = run_replicates(&cfg).unwrap();
    assert!(preset.mean.last().unwrap() < &preset.mean[0]);
}

#[test]
fn every_algorithm_runs_in_both_settings() {
    for algorithm in AlgorithmKind::ALL {
        for setting in [Setting::FiniteHorizon, Setting::Online] {
            let cfg = ExperimentConfig {
                algorithm,
                setting,
                replicates: 2,
                ..small(8)
            };
            let res = run_replicates(&cfg).unwrap();
            assert!(
                res.mean.iter().all(|v| v.is_finite() && *v > 0.0),
                "{algorithm} {setting}"
            );
        }
    }
}

fn noisy_power_law(seed: u64, rate: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ksgd_harness::data::log_checkpoints(10, 3162, 20)
        .into_iter()
        .map(|n| {
            let noise: f64 = rng.random_range(-1.0..1.0);
            (n as f64, (n as f64).powf(rate) * (1.0 + 0.1 * noise))
        })
        .collect()
}

#[test]
fn fit_of_synthetic_rate() {
    let fit = fit_rate(&noisy_power_law(0, -0.75)).unwrap();
    assert!((fit.slope + 0.75).abs() < 0.05, "{}", fit.slope);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fit_recovers_noisy_power_law(seed in any::<u64>(), rate in -1.0f64..-0.1) {
        // slope standard deviation is about 0.021 for this noise and window
        let fit = fit_rate(&noisy_power_law(seed, rate)).unwrap();
        prop_assert!((fit.slope - rate).abs() < 0.12, "{} vs {rate}", fit.slope);
    }
}
