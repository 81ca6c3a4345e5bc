use migrad_core::lab::{
    build_joint, finite_diff_mi, gradient_general, gradient_palomar, mmse_grid, mutual_information,
    posterior_log_gradient, score_conditional_mean_residual, AdditiveMap, GaussianMixture,
    GaussianPrior, GridSpec, ScalarChannel, DEFAULT_FD_STEP,
};
use migrad_core::verify::{converse_misses, LAB_FD_TOLERANCE};

#[test]
fn mixture_prior_tanh_channel() {
    let prior = GaussianMixture::symmetric_pair(1.0, 0.3).unwrap();
    let ch = ScalarChannel::Additive(AdditiveMap::Tanh);
    for gamma in [0.5, 1.5] {
        let grid = GridSpec::auto(&prior, ch, gamma).unwrap();
        let g = gradient_general(&prior, ch, gamma, &grid).unwrap();
        let fd = finite_diff_mi(&prior, ch, gamma, &grid, DEFAULT_FD_STEP).unwrap();
        assert!(
            (g - fd).abs() < LAB_FD_TOLERANCE,
            "gamma {gamma}: {g} vs {fd}"
        );
        let joint = build_joint(&prior, ch, gamma, &grid).unwrap();
        let s = posterior_log_gradient(&joint);
        assert!(score_conditional_mean_residual(&joint, &s) < 1e-6);
        assert!(mutual_information(&joint) > 0.0);
    }
}

#[test]
fn non_gaussian_input_breaks_linear_mmse_but_not_i_mmse() {
    let prior = GaussianMixture::symmetric_pair(1.5, 0.1).unwrap();
    let ch = ScalarChannel::Additive(AdditiveMap::Linear);
    let gamma = 1.0;
    let grid = GridSpec::auto(&prior, ch, gamma).unwrap();
    let g = gradient_general(&prior, ch, gamma, &grid).unwrap();
    let joint = build_joint(&prior, ch, gamma, &grid).unwrap();
    assert!((g - gamma * mmse_grid(&joint)).abs() < 5e-3);
}

#[test]
fn richardson_step_halving() {
    let prior = GaussianPrior::standard();
    let ch = ScalarChannel::Additive(AdditiveMap::Tanh);
    let grid = GridSpec::auto(&prior, ch, 1.0).unwrap();
    let d1 = finite_diff_mi(&prior, ch, 1.0, &grid, 0.04).unwrap();
    let d2 = finite_diff_mi(&prior, ch, 1.0, &grid, 0.02).unwrap();
    let d4 = finite_diff_mi(&prior, ch, 1.0, &grid, 0.01).unwrap();
    // O(h^2): successive changes shrink by about four
    let ratio = (d1 - d2) / (d2 - d4);
    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn quadratic_map_palomar_agreement() {
    let prior = GaussianPrior::standard();
    let ch = ScalarChannel::Additive(AdditiveMap::Quadratic);
    let gamma = 0.8;
    let grid = GridSpec::auto(&prior, ch, gamma).unwrap();
    let general = gradient_general(&prior, ch, gamma, &grid).unwrap();
    let palomar = gradient_palomar(&prior, ch, gamma, &grid, &|x| 2.0 * gamma * x).unwrap();
    assert!((general - palomar).abs() < 1e-6);
    // I = ln(1 + gamma^4)/2
    let exact = 2.0 * gamma.powi(3) / (1.0 + gamma.powi(4));
    assert!((general - exact).abs() < 1e-3);
}

#[test]
fn multiplicative_channel_general_formula_matches_fd() {
    let prior = GaussianPrior::standard();
    let ch = ScalarChannel::Multiplicative;
    for gamma in [0.7, 1.0] {
        let grid = GridSpec::auto(&prior, ch, gamma).unwrap();
        let g = gradient_general(&prior, ch, gamma, &grid).unwrap();
        let fd = finite_diff_mi(&prior, ch, gamma, &grid, DEFAULT_FD_STEP).unwrap();
        assert!((g - fd).abs() < LAB_FD_TOLERANCE);
    }
}

#[test]
fn naive_candidates_on_multiplicative_channel() {
    // the output law is even in y, so every xi(x) term integrates to zero and
    // no candidate can separate itself from the (near-zero) FD derivative
    let misses = converse_misses(1.0).unwrap();
    assert_eq!(misses.len(), 5);
    for (name, miss) in misses {
        assert!(miss < LAB_FD_TOLERANCE, "{name}: {miss}");
    }
}
