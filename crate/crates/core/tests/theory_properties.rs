use ksgd::theory::{
    classify_regime, competitor_rate, finite_horizon_bound, lower_threshold, minimax_rate,
    predicted_rate, saturation_cap, source_norm_sq, step_exponent_finite_horizon,
    step_exponent_online, RegimeClass, Setting,
};
use ksgd::BoundParams;
use proptest::prelude::*;

#[test]
fn experiment_points() {
    let fh = Setting::FiniteHorizon;
    let cases: [(f64, f64, f64, f64); 4] = [
        (2.0, 0.75, -0.5, -0.75),
        (4.0, 0.375, 0.0, -0.75),
        (2.0, 1.25, -0.6, -0.8),
        (4.0, 0.125, 0.0, -0.25),
    ];
    for (alpha, r, step, rate) in cases {
        assert!((step_exponent_finite_horizon(alpha, r) - step).abs() < 1e-15);
        assert!((predicted_rate(alpha, r, fh) - rate).abs() < 1e-15);
    }
    assert!((competitor_rate(1.25_f64) + 2.5 / 3.5).abs() < 1e-15);
    assert_eq!(classify_regime(2.0, 1.25, fh), RegimeClass::Saturation);
    assert_eq!(
        classify_regime(4.0, 0.125, fh),
        RegimeClass::BiasDominatedConstantStep
    );
    assert_eq!(classify_regime(2.0, 0.75, fh), RegimeClass::OptimalRegion);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rates_are_ordered(alpha in 1.01f64..8.0, r in 0.01f64..1.0) {
        for setting in [Setting::FiniteHorizon, Setting::Online] {
            let ours = predicted_rate(alpha, r, setting);
            prop_assert!(ours < 0.0 && ours > -1.0);
            // never better than minimax; below saturation never worse than the
            // capacity-agnostic rate
            prop_assert!(ours >= minimax_rate(alpha, r) - 1e-12);
            if r <= saturation_cap(alpha, setting) {
                prop_assert!(ours <= competitor_rate(r) + 1e-12);
            }
        }
    }

    #[test]
    fn rates_improve_with_smoothness(alpha in 1.01f64..8.0, r in 0.01f64..2.0, dr in 0.0f64..0.5) {
        for setting in [Setting::FiniteHorizon, Setting::Online] {
            prop_assert!(predicted_rate(alpha, r + dr, setting) <= predicted_rate(alpha, r, setting) + 1e-12);
        }
    }

    #[test]
    fn step_exponents_in_range(alpha in 1.01f64..8.0, r in 0.01f64..3.0) {
        for e in [step_exponent_finite_horizon(alpha, r), step_exponent_online(alpha, r)] {
            prop_assert!(e <= 0.0 && e > -1.0, "{e}");
        }
        if r < lower_threshold(alpha) {
            prop_assert_eq!(step_exponent_finite_horizon(alpha, r), 0.0);
        }
    }

    #[test]
    fn bound_decreases_along_the_tuned_step(n in 10usize..100_000) {
        let params = BoundParams {
            alpha: 2.0,
            r: 0.7125,
            s_sq: std::f64::consts::PI.powi(-2),
            sigma_sq: 0.01,
            r_sq: 1.0 / 12.0,
            source_norm_sq: source_norm_sq(1, 2, 0.7125).unwrap(),
        };
        let step = |n: usize| 3.0 * (n as f64).powf(-0.5);
        let a = finite_horizon_bound(n, step(n), &params).unwrap();
        let b = finite_horizon_bound(4 * n, step(4 * n), &params).unwrap();
        prop_assert!(b < a);
    }
}
