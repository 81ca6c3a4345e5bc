//! Two-user additive Gaussian MAC with noiseless feedback, driven by the
//! extended Schalkwijk–Kailath linear feedback scheme.
//!
//! Channel: `Y_i = sqrt(g_i) X1_i + sqrt(g_i) X2_i + W_i`, with `g_1 = gamma1`
//! and `g_i = gamma` for `i >= 2`. The message-bearing primitives are
//!
//! ```text
//! Z1 = sqrt(1 - rho) W_{-1} + sqrt(rho) W_0
//! Z2 = sqrt(1 - rho) W_{-2} + sqrt(rho) W_0
//! ```
//!
//! and the encoders send `X_k1 = sqrt(gamma1) Z_k` followed by the scaled
//! estimation errors
//!
//! ```text
//! X1_i =  sqrt(gamma) (X1_{i-1} - E{X1_{i-1} | Y_{i-1}})
//! X2_i = -sqrt(gamma) (X2_{i-1} - E{X2_{i-1} | Y_{i-1}})
//! ```
//!
//! Every signal is a [`LinearForm`] over `W_{-2}, W_{-1}, W_0, W_1, ..., W_n`
//! whose coefficients carry derivatives with respect to `gamma`, so the
//! mutual information `1/2 sum ln Var(Y_i)` and all decomposition terms are
//! exact up to floating-point roundoff.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::DualScalar;
use crate::error::{invalid, Error, Result};
use crate::linear_form::{covariance, lmmse_estimate, variance, LinearForm};
use crate::report::DecompositionReport;

/// Bisection iterations used by [`solve_rho_star`].
pub const RHO_BISECTION_ITERATIONS: usize = 200;
/// Damping of the fixed-point update in [`calibrate_gamma`].
pub const GAMMA_DAMPING: f64 = 0.5;
/// Step size at which [`calibrate_gamma`] is declared converged.
pub const GAMMA_STEP_TOLERANCE: f64 = 1e-12;
pub const GAMMA_MAX_ITERATIONS: usize = 10_000;
/// Step of the central difference stored in `derivative_fd`.
pub const SK_FD_STEP: f64 = 1e-5;
/// Largest normalized off-diagonal output covariance accepted at the
/// evaluation point.
pub const OUTPUT_DIAGONAL_TOLERANCE: f64 = 1e-10;

/// Whether the encoders react to a change of the channel gain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feedback {
    /// The full scheme: inputs depend on `gamma` through the
    /// encoder gain and through the fed-back outputs.
    #[default]
    Enabled,
    /// Inputs are generated once at the nominal `gamma` and then held fixed
    /// when the channel gain moves, so `dX/dgamma = 0`.
    Disabled,
}

/// Parameters of one S-K run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkConfig {
    /// Per-user power `P`.
    pub power: f64,
    /// Number of channel uses (at least 2).
    pub n: usize,
    pub rho_star: f64,
    /// Gain of the first channel use.
    pub gamma1: f64,
    /// Gain of every later channel use; the differentiation parameter.
    pub gamma: f64,
    pub feedback: Feedback,
}

impl SkConfig {
    pub fn new(power: f64, n: usize, rho_star: f64, gamma1: f64, gamma: f64) -> Result<Self> {
        let config = Self {
            power,
            n,
            rho_star,
            gamma1,
            gamma,
            feedback: Feedback::Enabled,
        };
        config.validate()?;
        Ok(config)
    }

    /// `rho*`, `gamma1` and `gamma` all calibrated to the power `P`.
    pub fn calibrated(power: f64, n: usize) -> Result<Self> {
        let rho_star = solve_rho_star(power)?;
        let gamma1 = calibrate_gamma1(power)?;
        let gamma = calibrate_gamma(power, rho_star)?;
        Self::new(power, n, rho_star, gamma1, gamma)
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        let config = Self { gamma, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn with_feedback(self, feedback: Feedback) -> Self {
        Self { feedback, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(invalid("power", format!("{} is not positive", self.power)));
        }
        if self.n < 2 {
            return Err(invalid(
                "n",
                format!("{} channel uses, need at least 2", self.n),
            ));
        }
        if !(0.0..=1.0).contains(&self.rho_star) {
            return Err(invalid(
                "rho_star",
                format!("{} outside [0, 1]", self.rho_star),
            ));
        }
        if !(self.gamma1 > 0.0) || !self.gamma1.is_finite() {
            return Err(invalid(
                "gamma1",
                format!("{} is not positive", self.gamma1),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", format!("{} is not positive", self.gamma)));
        }
        Ok(())
    }
}

/// Basis slot of the primitive `W_i`, `i >= -2`.
pub fn noise_index(i: isize) -> usize {
    debug_assert!(i >= -2);
    (i + 2) as usize
}

/// Channel inputs and outputs of one S-K run. Index `i - 1` of each vector
/// holds channel use `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkTrace {
    pub z1: LinearForm,
    pub z2: LinearForm,
    pub x1: Vec<LinearForm>,
    pub x2: Vec<LinearForm>,
    pub y: Vec<LinearForm>,
    /// Coefficients `c_k,i` of the encoders' estimates `E{X_k,i | Y_i} = c_k,i Y_i`.
    pub estimator_coeffs: Vec<[DualScalar; 2]>,
}

impl SkTrace {
    pub fn channel_uses(&self) -> usize {
        self.y.len()
    }

    pub fn basis_len(&self) -> usize {
        self.z1.len()
    }
}

/// Per-channel-use contributions to the decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTerms {
    pub step: usize,
    pub var_x1: f64,
    pub var_y: f64,
    pub cov_x1_y: f64,
    /// LMMSE coefficient of `X1_i` on `Y_i`.
    pub kappa: f64,
    pub mmse_user1: f64,
    pub mmse_user2: f64,
    pub crosscorr: f64,
    /// `gamma * E{(S - E{S|Y}) dS/dgamma}` with `S = X1 + X2`.
    pub feedback: f64,
}

/// Literal evaluation of the closed-form step-2 expressions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2ClosedForm {
    pub kappa1: f64,
    pub kappa2: f64,
    pub var_y1: f64,
    pub var_y2: f64,
    pub cov_x12_y2: f64,
    pub mmse2: f64,
    pub crosscorr2: f64,
    pub zeta2: f64,
}

fn capacity(snr: f64) -> f64 {
    0.5 * snr.ln_1p()
}

/// `(1 + (1 - rho^2) P)^2 - (1 + 2P(1 + rho))`, zero at `rho*`.
pub fn rho_star_residual(power: f64, rho: f64) -> f64 {
    let lhs = 1.0 + (1.0 - rho * rho) * power;
    lhs * lhs - (1.0 + 2.0 * power * (1.0 + rho))
}

// rho_star_residual / (P (1 + rho)), free of the cancellation at small P
fn rho_residual_reduced(power: f64, rho: f64) -> f64 {
    (1.0 - rho) * (1.0 - rho) * (1.0 + rho) * power - 2.0 * rho
}

/// Correlation `rho*` in `[0, 1]` equalizing `2C((1 - rho^2) P)` and
/// `C(2P(1 + rho))`, by bisection on the squared form of the equation.
pub fn solve_rho_star(power: f64) -> Result<f64> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(invalid("power", format!("{power} is not positive")));
    }
    // reduced residual is P > 0 at rho = 0 and -2 at rho = 1, strictly decreasing
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..RHO_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if rho_residual_reduced(power, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-user sum capacity `C(2P(1 + rho*))` in nats per channel use.
pub fn sum_capacity(power: f64) -> Result<f64> {
    let rho = solve_rho_star(power)?;
    Ok(capacity(2.0 * power * (1.0 + rho)))
}

/// The two arguments of the `min` in the sum-capacity expression at `rho`.
pub fn sum_capacity_bounds(power: f64, rho: f64) -> (f64, f64) {
    (
        2.0 * capacity((1.0 - rho * rho) * power),
        capacity(2.0 * power * (1.0 + rho)),
    )
}

/// First-use gain with `gamma1 * E{X_11^2} = P`; since `E{X_11^2} = gamma1`
/// this is `sqrt(P)`.
pub fn calibrate_gamma1(power: f64) -> Result<f64> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(invalid("power", format!("{power} is not positive")));
    }
    Ok(power.sqrt())
}

/// Per-user LMMSE error variance of one steady-state S-K step: two inputs of
/// variance `P / gamma` and correlation `rho`, observed through
/// `sqrt(gamma) (X1 + X2) + W`.
pub fn stationary_error_variance(power: f64, rho: f64, gamma: f64) -> Result<f64> {
    let c = DualScalar::constant;
    let v = power / gamma;
    let a = (1.0 - rho).sqrt() * v.sqrt();
    let s = rho.sqrt() * v.sqrt();
    // basis: private1, private2, shared, noise
    let x1 = LinearForm::from_coeffs(vec![c(a), c(0.0), c(s), c(0.0)]);
    let x2 = LinearForm::from_coeffs(vec![c(0.0), c(a), c(s), c(0.0)]);
    let y = (&x1 + &x2).scale(c(gamma.sqrt())).combine(
        DualScalar::ONE,
        &LinearForm::unit(4, 3),
        DualScalar::ONE,
    )?;
    Ok(variance(&lmmse_estimate(&x1, &y)?.residual).value)
}

/// Steady-state gain `gamma` with `gamma E{X_k,i^2} = P`, i.e. the fixed point
/// of `gamma^2 e(gamma) = P` where `e` is [`stationary_error_variance`].
///
/// Damped fixed-point iteration `gamma <- (1 - d) gamma + d sqrt(P / e(gamma))`.
pub fn calibrate_gamma(power: f64, rho_star: f64) -> Result<f64> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(invalid("power", format!("{power} is not positive")));
    }
    if !(0.0..1.0).contains(&rho_star) {
        return Err(invalid("rho_star", format!("{rho_star} outside [0, 1)")));
    }
    let mut gamma = 1.0 + power;
    let mut step = f64::INFINITY;
    for _ in 0..GAMMA_MAX_ITERATIONS {
        let e = stationary_error_variance(power, rho_star, gamma)?;
        let target = (power / e).sqrt();
        let next = (1.0 - GAMMA_DAMPING) * gamma + GAMMA_DAMPING * target;
        step = (next - gamma).abs();
        gamma = next;
        if step <= GAMMA_STEP_TOLERANCE {
            return Ok(gamma);
        }
    }
    Err(Error::NoConvergence {
        what: "gamma calibration",
        iterations: GAMMA_MAX_ITERATIONS,
        last_step: step,
    })
}

/// Runs the S-K recursion with all derivative slots seeded from `gamma`.
pub fn run_sk_recursion(config: &SkConfig) -> Result<SkTrace> {
    config.validate()?;
    run_with_channel_gain(config, config.gamma)
}

/// Recursion with the channel gain set to `channel_gamma`. With feedback
/// enabled the encoders follow the same gain; with feedback disabled they
/// keep operating at `config.gamma`.
pub(crate) fn run_with_channel_gain(config: &SkConfig, channel_gamma: f64) -> Result<SkTrace> {
    let c = DualScalar::constant;
    let n = config.n;
    let len = n + 3;
    let rho = config.rho_star;

    let channel_gain = DualScalar::variable(channel_gamma);
    let encoder_gain = match config.feedback {
        Feedback::Enabled => channel_gain,
        Feedback::Disabled => c(config.gamma),
    };
    let sqrt_channel = channel_gain.checked_sqrt()?;
    let sqrt_encoder = encoder_gain.checked_sqrt()?;
    let sqrt_gamma1 = c(config.gamma1.sqrt());

    let private = c((1.0 - rho).sqrt());
    let shared = c(rho.sqrt());
    let z1 = LinearForm::unit_scaled(len, noise_index(-1), private).combine(
        DualScalar::ONE,
        &LinearForm::unit(len, noise_index(0)),
        shared,
    )?;
    let z2 = LinearForm::unit_scaled(len, noise_index(-2), private).combine(
        DualScalar::ONE,
        &LinearForm::unit(len, noise_index(0)),
        shared,
    )?;

    let mut x1s = Vec::with_capacity(n);
    let mut x2s = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut coeffs = Vec::with_capacity(n);

    let mut x1 = z1.scale(sqrt_gamma1);
    let mut x2 = z2.scale(sqrt_gamma1);
    for i in 1..=n {
        let noise = LinearForm::unit(len, noise_index(i as isize));
        let (sqrt_ch, sqrt_enc) = if i == 1 {
            (sqrt_gamma1, sqrt_gamma1)
        } else {
            (sqrt_channel, sqrt_encoder)
        };
        let sum = &x1 + &x2;
        let y = sum
            .scale(sqrt_ch)
            .combine(DualScalar::ONE, &noise, DualScalar::ONE)?;
        // the encoders see the output produced by their own operating gain
        let y_enc = match config.feedback {
            Feedback::Enabled => y.clone(),
            Feedback::Disabled => {
                sum.scale(sqrt_enc)
                    .combine(DualScalar::ONE, &noise, DualScalar::ONE)?
            }
        };
        let e1 = lmmse_estimate(&x1, &y_enc)?;
        let e2 = lmmse_estimate(&x2, &y_enc)?;
        coeffs.push([e1.coefficient, e2.coefficient]);
        x1s.push(x1);
        x2s.push(x2);
        ys.push(y);
        x1 = e1.residual.scale(sqrt_encoder);
        x2 = e2.residual.scale(-sqrt_encoder);
    }

    Ok(SkTrace {
        z1,
        z2,
        x1: x1s,
        x2: x2s,
        y: ys,
        estimator_coeffs: coeffs,
    })
}

/// Per-step estimation, interference and feedback contributions, for every
/// channel use `1..=n` (use 1 is not a function of `gamma`).
pub fn step_terms(trace: &SkTrace, gamma: f64) -> Result<Vec<StepTerms>> {
    (0..trace.channel_uses())
        .map(|idx| {
            let (x1, x2, y) = (&trace.x1[idx], &trace.x2[idx], &trace.y[idx]);
            let est1 = lmmse_estimate(x1, y)?;
            let est2 = lmmse_estimate(x2, y)?;
            let (e1, e2) = (est1.residual, est2.residual);
            let sum_error = &e1 + &e2;
            let d_sum = (x1 + x2).derivative();
            let feedback = if idx == 0 {
                0.0
            } else {
                gamma * covariance(&sum_error, &d_sum)?.value
            };
            Ok(StepTerms {
                step: idx + 1,
                var_x1: variance(x1).value,
                var_y: variance(y).value,
                cov_x1_y: covariance(x1, y)?.value,
                kappa: est1.coefficient.value,
                mmse_user1: variance(&e1).value,
                mmse_user2: variance(&e2).value,
                crosscorr: covariance(&e1, &e2)?.value,
                feedback,
            })
        })
        .collect()
}

/// Largest `|Cov(Y_i, Y_j)| / sqrt(Var(Y_i) Var(Y_j))` over `i != j`, with
/// its location.
pub fn max_output_correlation(trace: &SkTrace) -> Result<(usize, usize, f64)> {
    let mut worst = (0, 0, 0.0_f64);
    let vars: Vec<f64> = trace.y.iter().map(|y| variance(y).value).collect();
    for i in 0..trace.y.len() {
        for j in (i + 1)..trace.y.len() {
            let cov = covariance(&trace.y[i], &trace.y[j])?.value;
            let r = cov.abs() / (vars[i] * vars[j]).sqrt();
            if r > worst.2 {
                worst = (i + 1, j + 1, r);
            }
        }
    }
    Ok(worst)
}

/// `1/2 ln det Cov(Y^n)` (values only), by Cholesky factorization.
pub fn log_det_mutual_information(trace: &SkTrace) -> Result<f64> {
    let n = trace.y.len();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let cov = covariance(&trace.y[i], &trace.y[j])?.value;
            a[i * n + j] = cov;
        }
    }
    let mut half_log_det = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::Domain {
                op: "cholesky",
                value: d,
            });
        }
        let l = d.sqrt();
        a[j * n + j] = l;
        half_log_det += l.ln();
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / l;
        }
    }
    Ok(half_log_det)
}

fn mutual_information_at(config: &SkConfig, channel_gamma: f64) -> Result<f64> {
    let trace = run_with_channel_gain(config, channel_gamma)?;
    log_det_mutual_information(&trace)
}

/// Decomposes `dI/dgamma` into `1/2 mmse + interference + feedback`, summing
/// channel uses `2..=n` and conditioning each use on its own output symbol.
pub fn decomposition_sk(trace: &SkTrace, config: &SkConfig) -> Result<DecompositionReport> {
    config.validate()?;
    if trace.channel_uses() != config.n {
        return Err(invalid(
            "trace",
            format!(
                "{} channel uses, config has {}",
                trace.channel_uses(),
                config.n
            ),
        ));
    }
    let (i, j, r) = max_output_correlation(trace)?;
    if r > OUTPUT_DIAGONAL_TOLERANCE {
        return Err(Error::NonDiagonalOutput { i, j, value: r });
    }

    let steps = step_terms(trace, config.gamma)?;
    let tail = &steps[1..];
    let mmse_term: f64 = tail.iter().map(|s| s.mmse_user1 + s.mmse_user2).sum();
    let interference_term: f64 = tail.iter().map(|s| s.crosscorr).sum();
    let feedback_term: f64 = tail.iter().map(|s| s.feedback).sum();

    let mut mi = DualScalar::ZERO;
    for y in &trace.y {
        mi += variance(y).checked_ln()?.scale(0.5);
    }

    let h = SK_FD_STEP.min(0.5 * config.gamma);
    let derivative_fd = (mutual_information_at(config, config.gamma + h)?
        - mutual_information_at(config, config.gamma - h)?)
        / (2.0 * h);

    Ok(DecompositionReport {
        gamma: config.gamma,
        channel_uses: config.n,
        mmse_term,
        interference_term,
        feedback_term,
        derivative_reconstructed: 0.5 * mmse_term + interference_term + feedback_term,
        derivative_dual: mi.deriv,
        derivative_fd,
        mutual_information: mi.value,
    })
}

/// Runs the recursion and the decomposition in one call.
pub fn analyze(config: &SkConfig) -> Result<DecompositionReport> {
    let trace = run_sk_recursion(config)?;
    decomposition_sk(&trace, config)
}

/// Closed forms for the first two channel uses.
pub fn closed_form_step2(gamma: f64, gamma1: f64, rho_star: f64) -> Result<Step2ClosedForm> {
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("{gamma} is not positive")));
    }
    if !(gamma1 > 0.0) {
        return Err(invalid("gamma1", format!("{gamma1} is not positive")));
    }
    if !(0.0..=1.0).contains(&rho_star) {
        return Err(invalid("rho_star", format!("{rho_star} outside [0, 1]")));
    }
    let (g, g1, r) = (gamma, gamma1, rho_star);

    let var_y1 = 2.0 * g1 * g1 * (1.0 + r) + 1.0;
    let kappa1 = g1 * (1.0 + r) / var_y1;
    let k1g1 = kappa1 * g1;
    let var_x12 = g
        * g1
        * ((1.0 - k1g1).powi(2) + k1g1 * k1g1 + kappa1 * kappa1 - 2.0 * k1g1 * (1.0 - k1g1) * r);
    let var_y2 = 2.0 * g * g * g1 * (1.0 - r) + 1.0;
    let cov_x12_y2 = g.powf(1.5) * g1 * (1.0 - r);
    let mmse2 = var_x12 - g.powi(3) * g1 * g1 * (1.0 - r).powi(2) / var_y2;
    let kappa2 = cov_x12_y2 / var_y2;
    let crosscorr2 = g
        * g1
        * (2.0 * k1g1 * (1.0 - k1g1)
            - r * (1.0 - k1g1).powi(2)
            - k1g1 * k1g1 * r
            - kappa1 * kappa1)
        - 2.0 * g.powf(1.5) * g1 * kappa2 * (1.0 - r)
        + kappa2 * kappa2 * var_y2;
    let zeta2 = g * g1 * (1.0 - r) / var_y2;

    Ok(Step2ClosedForm {
        kappa1,
        kappa2,
        var_y1,
        var_y2,
        cov_x12_y2,
        mmse2,
        crosscorr2,
        zeta2,
    })
}

/// The same eight quantities read off the engine at channel uses 1 and 2.
pub fn engine_step2(config: &SkConfig) -> Result<Step2ClosedForm> {
    let trace = run_sk_recursion(config)?;
    let steps = step_terms(&trace, config.gamma)?;
    let kappa1 = lmmse_estimate(&trace.z1, &trace.y[0])?.coefficient.value;
    let s2 = steps[1];
    Ok(Step2ClosedForm {
        kappa1,
        kappa2: s2.kappa,
        var_y1: steps[0].var_y,
        var_y2: s2.var_y,
        cov_x12_y2: s2.cov_x1_y,
        mmse2: s2.mmse_user1,
        crosscorr2: s2.crosscorr,
        zeta2: s2.feedback,
    })
}

/// Sweeps `gamma` over `gamma_grid` with `rho*` and `gamma1` held at their
/// `P`-calibrated values. Output order follows the grid.
pub fn sk_sweep(power: f64, n: usize, gamma_grid: &[f64]) -> Result<Vec<DecompositionReport>> {
    if gamma_grid.is_empty() {
        return Err(invalid("gamma_grid", "empty grid"));
    }
    let base = SkConfig::calibrated(power, n)?;
    gamma_grid
        .par_iter()
        .map(|&g| analyze(&base.with_gamma(g)?))
        .collect()
}
