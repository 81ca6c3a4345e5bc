use migrad_core::sk::{
    analyze, calibrate_gamma, closed_form_step2, engine_step2, run_sk_recursion, sk_sweep,
    solve_rho_star, stationary_error_variance, sum_capacity, Feedback, SkConfig,
};
use migrad_core::sweep::{default_gamma_range, gamma_grid};
use migrad_core::verify::{capacity_gap, random_sk_configs, sign_sweeps};
use proptest::prelude::*;

#[test]
fn rho_star_and_capacity_at_unit_power() {
    // (2 - r^2)^2 = 3 + 2r
    let r = solve_rho_star(1.0).unwrap();
    assert!(((2.0 - r * r).powi(2) - (3.0 + 2.0 * r)).abs() < 1e-12);
    assert!((r - 0.311).abs() < 1e-3);
    assert!((sum_capacity(1.0).unwrap() - 0.6435).abs() < 1e-4);
}

#[test]
fn calibrated_gain_is_a_fixed_point() {
    for rho in [0.0, 0.3, 0.6] {
        let g = calibrate_gamma(1.0, rho).unwrap();
        let e = stationary_error_variance(1.0, rho, g).unwrap();
        assert!((g * g * e - 1.0).abs() < 1e-10, "rho {rho}");
    }
    // at rho = 0, P = 1 the fixed point solves 3 / (1 + 1) = 1.5
    assert!((calibrate_gamma(1.0, 0.0).unwrap() - 1.5).abs() < 1e-10);
}

#[test]
fn identity_over_random_configs() {
    for c in random_sk_configs(50, 99) {
        let r = analyze(&c).unwrap();
        let rel = (r.derivative_dual - r.derivative_reconstructed).abs() / r.derivative_dual.abs();
        assert!(rel <= 1e-10, "{c:?}: {rel}");
        assert!(
            (r.derivative_fd - r.derivative_reconstructed).abs() <= 1e-6,
            "{c:?}"
        );
    }
}

#[test]
fn closed_forms_agree_with_engine() {
    for g in [0.4, 1.0, 2.2] {
        for g1 in [0.5, 1.0, 1.7] {
            for r in [0.0, 0.35, 0.8] {
                let cf = closed_form_step2(g, g1, r).unwrap();
                let en = engine_step2(&SkConfig::new(1.0, 3, r, g1, g).unwrap()).unwrap();
                let pairs = [
                    (cf.kappa1, en.kappa1),
                    (cf.kappa2, en.kappa2),
                    (cf.var_y1, en.var_y1),
                    (cf.var_y2, en.var_y2),
                    (cf.cov_x12_y2, en.cov_x12_y2),
                    (cf.mmse2, en.mmse2),
                    (cf.crosscorr2, en.crosscorr2),
                    (cf.zeta2, en.zeta2),
                ];
                for (a, b) in pairs {
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0));
                }
            }
        }
    }
}

#[test]
fn sign_structure_on_calibrated_sweeps() {
    for r in sign_sweeps(10, Feedback::Enabled).unwrap() {
        assert!(r.feedback_term > 0.0, "{r:?}");
        assert!(r.interference_term < 0.0, "{r:?}");
    }
    for r in sign_sweeps(10, Feedback::Disabled).unwrap() {
        assert_eq!(r.feedback_term, 0.0);
    }
}

#[test]
fn information_rate_approaches_sum_capacity() {
    let gaps: Vec<f64> = [10, 20, 50]
        .iter()
        .map(|&n| capacity_gap(1.0, n).unwrap())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.02);
}

#[test]
fn mutual_information_grows_with_gain() {
    let (lo, hi) = default_gamma_range(2.0).unwrap();
    let rows = sk_sweep(2.0, 12, &gamma_grid(lo, hi, 15).unwrap()).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].mutual_information >= w[0].mutual_information);
    }
}

#[test]
fn disabled_feedback_matches_enabled_at_the_nominal_point() {
    let c = SkConfig::new(1.5, 9, 0.4, 1.2, 1.8).unwrap();
    let on = run_sk_recursion(&c).unwrap();
    let off = run_sk_recursion(&c.with_feedback(Feedback::Disabled)).unwrap();
    for (a, b) in on.y.iter().zip(&off.y) {
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((p.value - q.value).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_hold_on_random_parameters(g in 0.1..4.0f64, g1 in 0.1..4.0f64, r in 0.0..1.0f64) {
        let cf = closed_form_step2(g, g1, r).unwrap();
        let en = engine_step2(&SkConfig::new(1.0, 2, r, g1, g).unwrap()).unwrap();
        prop_assert!((cf.mmse2 - en.mmse2).abs() <= 1e-11 * cf.mmse2.abs().max(1.0));
        prop_assert!((cf.crosscorr2 - en.crosscorr2).abs() <= 1e-11 * cf.crosscorr2.abs().max(1.0));
        prop_assert!((cf.zeta2 - en.zeta2).abs() <= 1e-11 * cf.zeta2.abs().max(1.0));
    }
}
