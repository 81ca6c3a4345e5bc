use migrad_core::sk::{analyze, SkConfig};
use migrad_core::{covariance, lmmse_estimate, variance, DualScalar, LinearForm};
use proptest::prelude::*;

fn dual() -> impl Strategy<Value = DualScalar> {
    (-3.0..3.0f64, -2.0..2.0f64).prop_map(|(v, d)| DualScalar::new(v, d))
}

fn form(len: usize) -> impl Strategy<Value = LinearForm> {
    prop::collection::vec(dual(), len).prop_map(LinearForm::from_coeffs)
}

fn pair() -> impl Strategy<Value = (LinearForm, LinearForm)> {
    (1usize..12).prop_flat_map(|n| (form(n), form(n)))
}

proptest! {
    #[test]
    fn lmmse_residual_is_orthogonal((x, y) in pair()) {
        prop_assume!(variance(&y).value > 1e-3);
        let e = lmmse_estimate(&x, &y).unwrap();
        let c = covariance(&e.residual, &y).unwrap();
        let scale = variance(&x).value.max(1.0);
        prop_assert!(c.value.abs() <= 1e-12 * scale);
        prop_assert!(c.deriv.abs() <= 1e-9 * scale.max(variance(&x).deriv.abs()));
    }

    #[test]
    fn variance_expands_bilinearly((x, y) in pair(), a in dual(), b in dual()) {
        let z = x.combine(a, &y, b).unwrap();
        let lhs = variance(&z);
        let rhs = a * a * variance(&x) + DualScalar::constant(2.0) * a * b * covariance(&x, &y).unwrap()
            + b * b * variance(&y);
        let tol = 1e-10 * (1.0 + lhs.value.abs() + rhs.value.abs());
        prop_assert!((lhs.value - rhs.value).abs() <= tol);
        prop_assert!((lhs.deriv - rhs.deriv).abs() <= 1e-9 * (1.0 + lhs.deriv.abs()));
    }

    #[test]
    fn combine_is_elementwise((x, y) in pair(), a in dual(), b in dual()) {
        let z = x.combine(a, &y, b).unwrap();
        for k in 0..z.len() {
            let expect = a * x.coeffs()[k] + b * y.coeffs()[k];
            prop_assert_eq!(z.coeffs()[k], expect);
        }
    }

    #[test]
    fn dual_chain_rule_matches_difference(t in 0.2..5.0f64) {
        // f(t) = ln(sqrt(t) * t + 1) / (t + 2)
        let f = |d: DualScalar| -> DualScalar {
            let num = (d.checked_sqrt().unwrap() * d + DualScalar::ONE).checked_ln().unwrap();
            num.checked_div(d + DualScalar::constant(2.0)).unwrap()
        };
        let h = 1e-6;
        let fd = (f(DualScalar::constant(t + h)).value - f(DualScalar::constant(t - h)).value) / (2.0 * h);
        prop_assert!((f(DualScalar::variable(t)).deriv - fd).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn feedback_mutual_information_derivative_matches_fd(
        power in 0.25..4.0f64,
        n in 5usize..40,
        rho in 0.0..0.9f64,
        gamma in 0.2..3.0f64,
    ) {
        let r = analyze(&SkConfig::new(power, n, rho, power.sqrt(), gamma).unwrap()).unwrap();
        prop_assert!((r.derivative_dual - r.derivative_fd).abs() <= 1e-6);
    }
}
