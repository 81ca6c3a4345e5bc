//! Two-user Gaussian MAC without feedback.
//!
//! Each use carries `Y = g1 X1 + g2 X2 + W` with independent inputs
//! `Xk ~ N(0, s2_k)` whose variances stay fixed when the gains move. The
//! effective power of user `k` is `P_k = g_k^2 s2_k`.

use serde::{Deserialize, Serialize};

use crate::dual::DualScalar;
use crate::error::{invalid, Result};
use crate::linear_form::{covariance, lmmse_estimate, variance, LinearForm};
use crate::report::DecompositionReport;

/// Step of the central difference stored in `derivative_fd`.
pub const NF_FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfConfig {
    /// Input variance of user 1 (zero switches the user off).
    pub sigma2_1: f64,
    pub sigma2_2: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    /// Number of channel uses.
    pub n: usize,
}

impl NfConfig {
    pub fn new(sigma2_1: f64, sigma2_2: f64, gamma_1: f64, gamma_2: f64, n: usize) -> Result<Self> {
        let config = Self {
            sigma2_1,
            sigma2_2,
            gamma_1,
            gamma_2,
            n,
        };
        config.validate()?;
        Ok(config)
    }

    /// Both users with gain `gamma` and input variance `sigma2`.
    pub fn symmetric(gamma: f64, sigma2: f64, n: usize) -> Result<Self> {
        Self::new(sigma2, sigma2, gamma, gamma, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma2_1", self.sigma2_1), ("sigma2_2", self.sigma2_2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} is not a variance")));
            }
        }
        for (name, v) in [("gamma_1", self.gamma_1), ("gamma_2", self.gamma_2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{v} is not positive")));
            }
        }
        if self.n == 0 {
            return Err(invalid("n", "need at least one channel use"));
        }
        Ok(())
    }

    pub fn power(&self, user: usize) -> f64 {
        match user {
            1 => self.gamma_1 * self.gamma_1 * self.sigma2_1,
            _ => self.gamma_2 * self.gamma_2 * self.sigma2_2,
        }
    }

    fn gain(&self, user: usize) -> f64 {
        if user == 1 {
            self.gamma_1
        } else {
            self.gamma_2
        }
    }
}

/// Symmetric closed forms, per channel use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfClosedForms {
    /// `gamma * (mmse_1 + mmse_2)`.
    pub mmse_scaled: f64,
    pub interference: f64,
    pub mutual_information: f64,
}

pub fn nf_closed_forms(gamma: f64, sigma2: f64) -> Result<NfClosedForms> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma", format!("{gamma} is not positive")));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", format!("{sigma2} is not a variance")));
    }
    let p = gamma * gamma * sigma2;
    let denom = gamma * (1.0 + 2.0 * p);
    Ok(NfClosedForms {
        mmse_scaled: 2.0 * p * (p + 1.0) / denom,
        interference: -2.0 * p * p / denom,
        mutual_information: 0.5 * (2.0 * p).ln_1p(),
    })
}

/// Which gains carry a unit derivative seed.
#[derive(Clone, Copy)]
enum Seed {
    Both,
    User(usize),
}

struct Symbol {
    x: [LinearForm; 2],
    y: LinearForm,
}

/// One independent symbol per use over the basis `(U1_i, U2_i, W_i)`.
fn build(config: &NfConfig, seed: Seed, gains: [f64; 2]) -> Vec<Symbol> {
    let len = 3 * config.n;
    let seeded = |user: usize| match seed {
        Seed::Both => true,
        Seed::User(l) => l == user,
    };
    let gain = |user: usize| {
        let g = gains[user - 1];
        if seeded(user) {
            DualScalar::variable(g)
        } else {
            DualScalar::constant(g)
        }
    };
    let (g1, g2) = (gain(1), gain(2));
    (0..config.n)
        .map(|i| {
            let x1 =
                LinearForm::unit_scaled(len, 3 * i, DualScalar::constant(config.sigma2_1.sqrt()));
            let x2 = LinearForm::unit_scaled(
                len,
                3 * i + 1,
                DualScalar::constant(config.sigma2_2.sqrt()),
            );
            let w = LinearForm::unit(len, 3 * i + 2);
            let y = &(&x1.scale(g1) + &x2.scale(g2)) + &w;
            Symbol { x: [x1, x2], y }
        })
        .collect()
}

fn mutual_information(symbols: &[Symbol]) -> Result<DualScalar> {
    let mut mi = DualScalar::ZERO;
    for s in symbols {
        mi += variance(&s.y).checked_ln()?.scale(0.5);
    }
    Ok(mi)
}

struct Moments {
    mmse: [f64; 2],
    cross: f64,
}

fn moments(symbols: &[Symbol]) -> Result<Moments> {
    let mut m = Moments {
        mmse: [0.0; 2],
        cross: 0.0,
    };
    for s in symbols {
        let e1 = lmmse_estimate(&s.x[0], &s.y)?.residual;
        let e2 = lmmse_estimate(&s.x[1], &s.y)?.residual;
        m.mmse[0] += variance(&e1).value;
        m.mmse[1] += variance(&e2).value;
        m.cross += covariance(&e1, &e2)?.value;
    }
    Ok(m)
}

fn fd_derivative(config: &NfConfig, seed: Seed) -> Result<f64> {
    let base = [config.gamma_1, config.gamma_2];
    let h = NF_FD_STEP.min(0.5 * base[0].min(base[1]));
    let shifted = |sign: f64| {
        let mut g = base;
        for (k, gk) in g.iter_mut().enumerate() {
            if matches!(seed, Seed::Both) || matches!(seed, Seed::User(l) if l == k + 1) {
                *gk += sign * h;
            }
        }
        mutual_information(&build(config, seed, g)).map(|mi| mi.value)
    };
    Ok((shifted(1.0)? - shifted(-1.0)?) / (2.0 * h))
}

/// Decomposition of the derivative with respect to a common shift of both
/// gains. The reconstruction is `sum_l g_l mmse_l + interference`, which in
/// the symmetric case reads `gamma * mmse_term + interference_term`.
pub fn nf_exact(config: &NfConfig) -> Result<DecompositionReport> {
    config.validate()?;
    let symbols = build(config, Seed::Both, [config.gamma_1, config.gamma_2]);
    let m = moments(&symbols)?;
    let mi = mutual_information(&symbols)?;
    let interference = (config.gamma_1 + config.gamma_2) * m.cross;
    Ok(DecompositionReport {
        gamma: config.gamma_1,
        channel_uses: config.n,
        mmse_term: m.mmse[0] + m.mmse[1],
        interference_term: interference,
        feedback_term: 0.0,
        derivative_reconstructed: config.gamma_1 * m.mmse[0]
            + config.gamma_2 * m.mmse[1]
            + interference,
        derivative_dual: mi.deriv,
        derivative_fd: fd_derivative(config, Seed::Both)?,
        mutual_information: mi.value,
    })
}

/// Decomposition of `dI/dgamma_l` for user `l` in `{1, 2}`:
/// `gamma_l mmse_l + sum_{k != l} gamma_k E{e_l e_k}`.
///
/// `mmse_term` holds `mmse_l` alone and `gamma` holds `gamma_l`.
pub fn nf_per_user_gradient(config: &NfConfig, which_user: usize) -> Result<DecompositionReport> {
    config.validate()?;
    if !(1..=2).contains(&which_user) {
        return Err(invalid("which_user", format!("{which_user} is not 1 or 2")));
    }
    let other = 3 - which_user;
    let symbols = build(
        config,
        Seed::User(which_user),
        [config.gamma_1, config.gamma_2],
    );
    let m = moments(&symbols)?;
    let mi = mutual_information(&symbols)?;
    let mmse = m.mmse[which_user - 1];
    let interference = config.gain(other) * m.cross;
    Ok(DecompositionReport {
        gamma: config.gain(which_user),
        channel_uses: config.n,
        mmse_term: mmse,
        interference_term: interference,
        feedback_term: 0.0,
        derivative_reconstructed: config.gain(which_user) * mmse + interference,
        derivative_dual: mi.deriv,
        derivative_fd: fd_derivative(config, Seed::User(which_user))?,
        mutual_information: mi.value,
    })
}

/// The per-user interference sum taken over every `k`, including `k = l`.
/// Exceeds the true interference by `gamma_l mmse_l`; kept to document the
/// discrepancy against the finite-difference derivative.
pub fn nf_per_user_interference_all_k(config: &NfConfig, which_user: usize) -> Result<f64> {
    let r = nf_per_user_gradient(config, which_user)?;
    Ok(r.interference_term + r.gamma * r.mmse_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_unit_power() {
        let c = nf_closed_forms(1.0, 1.0).unwrap();
        assert!((c.mmse_scaled - 4.0 / 3.0).abs() < 1e-15);
        assert!((c.interference + 2.0 / 3.0).abs() < 1e-15);
        assert!((c.mutual_information - 0.5 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_vanish_without_signal() {
        let c = nf_closed_forms(1.3, 0.0).unwrap();
        assert_eq!(c.mmse_scaled, 0.0);
        assert_eq!(c.interference, 0.0);
        assert_eq!(c.mutual_information, 0.0);
        let tiny = nf_closed_forms(1.3, 1e-14).unwrap();
        assert!(tiny.mmse_scaled.abs() < 1e-13 && tiny.mutual_information < 1e-13);
    }

    #[test]
    fn closed_forms_reject_bad_domain() {
        assert!(nf_closed_forms(0.0, 1.0).is_err());
        assert!(nf_closed_forms(1.0, -1.0).is_err());
        assert!(nf_closed_forms(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn interference_is_negative() {
        for p in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            assert!(nf_closed_forms(1.0, p).unwrap().interference < 0.0);
        }
    }

    #[test]
    fn engine_matches_closed_forms() {
        for (g, s2) in [(1.0, 1.0), (0.4, 2.5), (2.2, 0.3)] {
            let n = 4;
            let r = nf_exact(&NfConfig::symmetric(g, s2, n).unwrap())
                .unwrap()
                .per_use();
            let c = nf_closed_forms(g, s2).unwrap();
            assert!((g * r.mmse_term - c.mmse_scaled).abs() < 1e-12);
            assert!((r.interference_term - c.interference).abs() < 1e-12);
            assert!((r.mutual_information - c.mutual_information).abs() < 1e-12);
            assert_eq!(r.feedback_term, 0.0);
        }
    }

    #[test]
    fn symmetric_derivative_identity() {
        let r = nf_exact(&NfConfig::symmetric(1.0, 1.0, 1).unwrap()).unwrap();
        assert!((r.derivative_reconstructed - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.derivative_dual - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.derivative_fd - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn per_user_gradient_example() {
        let cfg = NfConfig::symmetric(1.0, 1.0, 1).unwrap();
        let r = nf_per_user_gradient(&cfg, 1).unwrap();
        assert!((r.derivative_reconstructed - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.derivative_dual - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.derivative_fd - 1.0 / 3.0).abs() < 1e-8);
        let all_k = nf_per_user_interference_all_k(&cfg, 1).unwrap();
        assert!((all_k + r.gamma * r.mmse_term - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_user_reduces_to_i_mmse() {
        let (g, s2) = (1.7, 0.8);
        let cfg = NfConfig::new(s2, 0.0, g, 1.0, 2).unwrap();
        let r = nf_per_user_gradient(&cfg, 1).unwrap().per_use();
        assert!(r.interference_term.abs() < 1e-15);
        let expect = g * s2 / (1.0 + g * g * s2);
        assert!((r.derivative_reconstructed - expect).abs() < 1e-12);
        assert!((r.derivative_dual - expect).abs() < 1e-12);
    }

    #[test]
    fn swapping_users_swaps_gradients() {
        let a = NfConfig::new(0.7, 1.9, 1.3, 0.6, 1).unwrap();
        let b = NfConfig::new(1.9, 0.7, 0.6, 1.3, 1).unwrap();
        let a1 = nf_per_user_gradient(&a, 1).unwrap();
        let b2 = nf_per_user_gradient(&b, 2).unwrap();
        assert!((a1.derivative_dual - b2.derivative_dual).abs() < 1e-14);
        assert!((a1.derivative_reconstructed - b2.derivative_reconstructed).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(NfConfig::new(1.0, 1.0, 0.0, 1.0, 1).is_err());
        assert!(NfConfig::new(-1.0, 1.0, 1.0, 1.0, 1).is_err());
        assert!(NfConfig::new(1.0, 1.0, 1.0, 1.0, 0).is_err());
        let cfg = NfConfig::symmetric(1.0, 1.0, 1).unwrap();
        assert!(nf_per_user_gradient(&cfg, 3).is_err());
        assert!(nf_per_user_gradient(&cfg, 0).is_err());
    }
}
