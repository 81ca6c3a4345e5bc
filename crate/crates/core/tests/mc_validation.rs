use migrad_core::mc::{draw_primitives, simulate_sk_mc, McConfig};
use migrad_core::sk::{analyze, run_sk_recursion, Feedback, SkConfig};

#[test]
fn terms_within_three_standard_errors() {
    let sk = SkConfig::new(2.0, 8, 0.5, 2f64.sqrt(), 1.6).unwrap();
    let exact = analyze(&sk).unwrap();
    let mc = simulate_sk_mc(&sk, &McConfig::new(50_000, 3).unwrap()).unwrap();
    assert!((mc.report.mmse_term - exact.mmse_term).abs() <= 3.0 * mc.mmse_se);
    assert!(
        (mc.report.interference_term - exact.interference_term).abs() <= 3.0 * mc.interference_se
    );
    assert!((mc.report.feedback_term - exact.feedback_term).abs() <= 3.0 * mc.feedback_se);
    assert!(
        (mc.report.derivative_reconstructed - exact.derivative_reconstructed).abs()
            <= 3.0 * mc.reconstructed_se
    );
}

#[test]
fn same_seed_same_bits() {
    let sk = SkConfig::calibrated(1.0, 6).unwrap();
    let cfg = McConfig::new(20_000, 42).unwrap();
    let a = simulate_sk_mc(&sk, &cfg).unwrap();
    let b = simulate_sk_mc(&sk, &cfg).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c = pool.install(|| simulate_sk_mc(&sk, &cfg).unwrap());
    assert_eq!(a, c);
    let d = simulate_sk_mc(&sk, &McConfig::new(20_000, 43).unwrap()).unwrap();
    assert_ne!(a.report.mmse_term, d.report.mmse_term);
}

#[test]
fn frozen_encoders_have_no_feedback_estimate() {
    let sk = SkConfig::calibrated(1.0, 6)
        .unwrap()
        .with_feedback(Feedback::Disabled);
    let mc = simulate_sk_mc(&sk, &McConfig::new(10_000, 5).unwrap()).unwrap();
    assert_eq!(mc.report.feedback_term, 0.0);
}

#[test]
fn crn_derivative_of_a_linear_statistic() {
    // E{X1_i W_k} is the coefficient of W_k in X1_i; its CRN derivative
    // estimate should track the dual derivative of that coefficient.
    let sk = SkConfig::new(1.0, 5, 0.3, 1.0, 1.4).unwrap();
    let h = 1e-4;
    let at = |g: f64| run_sk_recursion(&sk.with_gamma(g).unwrap()).unwrap();
    let (up, down, mid) = (at(sk.gamma + h), at(sk.gamma - h), at(sk.gamma));
    let (i, k) = (3, 1);
    let samples = 50_000;
    let stats: Vec<f64> = (0..samples)
        .map(|j| {
            let w = draw_primitives(9, j, mid.basis_len());
            (up.x1[i].evaluate(&w) - down.x1[i].evaluate(&w)) / (2.0 * h) * w[k]
        })
        .collect();
    let mean = stats.iter().sum::<f64>() / samples as f64;
    let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
    let se = (var / samples as f64).sqrt();
    let exact = mid.x1[i].coeffs()[k].deriv;
    assert!(
        (mean - exact).abs() <= 3.0 * se + 1e-6,
        "{mean} vs {exact} (se {se})"
    );
}
