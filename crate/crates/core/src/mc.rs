//! Monte Carlo estimates of the S-K decomposition terms.
//!
//! Each sample draws the primitives `W_{-2}, ..., W_n` once and replays the
//! recursion at `gamma - h`, `gamma` and `gamma + h` on those same draws.
//! Estimator coefficients come from the exact engine, so the only
//! randomness is in the expectations being estimated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::report::DecompositionReport;
use crate::sk::{decomposition_sk, run_with_channel_gain, Feedback, SkConfig, SkTrace};

pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_CRN_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    /// Sample `j` draws from stream `j` of a ChaCha8 generator keyed by this seed.
    pub seed: u64,
    /// Step of the common-random-number central difference.
    pub crn_step: f64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        let config = Self {
            samples,
            seed,
            crn_step: DEFAULT_CRN_STEP,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_crn_step(self, h: f64) -> Result<Self> {
        let config = Self {
            crn_step: h,
            ..self
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(invalid(
                "samples",
                format!("{} samples, need at least {MIN_SAMPLES}", self.samples),
            ));
        }
        let h = self.crn_step;
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("crn_step", format!("{h} is not a positive step")));
        }
        Ok(())
    }
}

/// Monte Carlo estimates with their standard errors.
///
/// `report` holds the sample means of the three terms and of their
/// weighted sum; its `derivative_dual`, `derivative_fd` and
/// `mutual_information` fields are copied from the exact engine for
/// reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub report: DecompositionReport,
    pub samples: usize,
    pub mmse_se: f64,
    pub interference_se: f64,
    pub feedback_se: f64,
    pub reconstructed_se: f64,
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Generator for sample `j`.
pub fn sample_rng(seed: u64, j: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j);
    rng
}

/// Draws of `W_{-2}, ..., W_n` for sample `j`.
pub fn draw_primitives(seed: u64, j: u64, len: usize) -> Vec<f64> {
    let mut rng = sample_rng(seed, j);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Numeric replay of the recursion on one draw. Returns the per-use inputs.
struct Path {
    x1: Vec<f64>,
    x2: Vec<f64>,
    y: Vec<f64>,
}

fn replay(config: &SkConfig, trace: &SkTrace, channel_gamma: f64, w: &[f64]) -> Path {
    let n = config.n;
    let rho = config.rho_star;
    let (a, s) = ((1.0 - rho).sqrt(), rho.sqrt());
    let z1 = a * w[1] + s * w[2];
    let z2 = a * w[0] + s * w[2];
    let sqrt_g1 = config.gamma1.sqrt();
    let encoder_gamma = match config.feedback {
        Feedback::Enabled => channel_gamma,
        Feedback::Disabled => config.gamma,
    };
    let mut path = Path {
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    let (mut x1, mut x2) = (sqrt_g1 * z1, sqrt_g1 * z2);
    for i in 0..n {
        let noise = w[i + 3];
        let (ch, enc) = if i == 0 {
            (sqrt_g1, sqrt_g1)
        } else {
            (channel_gamma.sqrt(), encoder_gamma.sqrt())
        };
        let y = ch * (x1 + x2) + noise;
        let y_enc = enc * (x1 + x2) + noise;
        let [c1, c2] = trace.estimator_coeffs[i];
        path.x1.push(x1);
        path.x2.push(x2);
        path.y.push(y);
        let sqrt_enc = encoder_gamma.sqrt();
        x1 = sqrt_enc * (x1 - c1.value * y_enc);
        x2 = -sqrt_enc * (x2 - c2.value * y_enc);
    }
    path
}

/// Estimates the mmse, interference and feedback totals of
/// [`decomposition_sk`] by simulation.
pub fn simulate_sk_mc(sk: &SkConfig, mc: &McConfig) -> Result<McReport> {
    sk.validate()?;
    mc.validate()?;
    let gamma = sk.gamma;
    let h = mc.crn_step.min(0.5 * gamma);
    let nominal = run_with_channel_gain(sk, gamma)?;
    let up = run_with_channel_gain(sk, gamma + h)?;
    let down = run_with_channel_gain(sk, gamma - h)?;
    let exact = decomposition_sk(&nominal, sk)?;
    let len = nominal.basis_len();

    let per_sample: Vec<[f64; 3]> = (0..mc.samples as u64)
        .into_par_iter()
        .map(|j| {
            let w = draw_primitives(mc.seed, j, len);
            let p0 = replay(sk, &nominal, gamma, &w);
            let pu = replay(sk, &up, gamma + h, &w);
            let pd = replay(sk, &down, gamma - h, &w);
            let mut acc = [0.0; 3];
            for i in 1..sk.n {
                let [c1, c2] = nominal.estimator_coeffs[i];
                let e1 = p0.x1[i] - c1.value * p0.y[i];
                let e2 = p0.x2[i] - c2.value * p0.y[i];
                let ds = ((pu.x1[i] + pu.x2[i]) - (pd.x1[i] + pd.x2[i])) / (2.0 * h);
                acc[0] += e1 * e1 + e2 * e2;
                acc[1] += e1 * e2;
                acc[2] += gamma * (e1 + e2) * ds;
            }
            acc
        })
        .collect();

    let column = |k: usize| -> Vec<f64> { per_sample.iter().map(|s| s[k]).collect() };
    let (mmse, mmse_se) = mean_and_se(&column(0));
    let (cross, cross_se) = mean_and_se(&column(1));
    let (fb, fb_se) = mean_and_se(&column(2));
    let combined: Vec<f64> = per_sample
        .iter()
        .map(|s| 0.5 * s[0] + s[1] + s[2])
        .collect();
    let (reconstructed, reconstructed_se) = mean_and_se(&combined);

    Ok(McReport {
        report: DecompositionReport {
            mmse_term: mmse,
            interference_term: cross,
            feedback_term: fb,
            derivative_reconstructed: reconstructed,
            ..exact
        },
        samples: mc.samples,
        mmse_se,
        interference_se: cross_se,
        feedback_se: fb_se,
        reconstructed_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_form::LinearForm;

    #[test]
    fn config_rejects_small_sample_counts() {
        assert!(McConfig::new(9_999, 1).is_err());
        assert!(McConfig::new(10_000, 1)
            .unwrap()
            .with_crn_step(0.0)
            .is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        let (m, se) = mean_and_se(&[1.0, 1.0, 1.0]);
        assert_eq!((m, se), (1.0, 0.0));
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a = draw_primitives(7, 3, 5);
        let _ = draw_primitives(7, 2, 5);
        assert_eq!(a, draw_primitives(7, 3, 5));
        assert_ne!(a, draw_primitives(7, 4, 5));
    }

    #[test]
    fn replay_matches_linear_forms() {
        let cfg = SkConfig::new(1.3, 6, 0.4, 1.1, 1.7).unwrap();
        let trace = run_with_channel_gain(&cfg, cfg.gamma).unwrap();
        let w = draw_primitives(11, 0, trace.basis_len());
        let p = replay(&cfg, &trace, cfg.gamma, &w);
        let eval = |f: &LinearForm| f.evaluate(&w);
        for i in 0..cfg.n {
            assert!((p.x1[i] - eval(&trace.x1[i])).abs() < 1e-12);
            assert!((p.x2[i] - eval(&trace.x2[i])).abs() < 1e-12);
            assert!((p.y[i] - eval(&trace.y[i])).abs() < 1e-12);
        }
    }
}
