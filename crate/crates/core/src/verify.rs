//! Self-checks of every module, grouped into suites.
//!
//! A check compares one measured quantity with a tolerance. Gating checks
//! decide the overall verdict; diagnostic checks are reported but do not.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual::DualScalar;
use crate::error::{invalid, Error, Result};
use crate::lab::{
    self, build_joint, finite_diff_mi, gradient_general, gradient_palomar, AdditiveMap,
    GaussianPrior, GridSpec, ScalarChannel,
};
use crate::linear_form::{covariance, lmmse_estimate, variance, LinearForm};
use crate::mc::{simulate_sk_mc, McConfig};
use crate::nf::{
    nf_closed_forms, nf_exact, nf_per_user_gradient, nf_per_user_interference_all_k, NfConfig,
};
use crate::report::DecompositionReport;
use crate::sk::{
    self, analyze, closed_form_step2, engine_step2, max_output_correlation, run_sk_recursion,
    solve_rho_star, step_terms, sum_capacity, Feedback, SkConfig, Step2ClosedForm,
};
use crate::sweep::{default_gamma_range, gamma_grid};

/// Seed of the random configurations drawn by the suites.
pub const VERIFY_SEED: u64 = 0x5eed_0f1d;
/// Seed of the Monte Carlo checks.
pub const MC_SEED: u64 = 20_240_601;
/// Powers whose calibrated `rho*` is used for the sign checks.
pub const SIGN_POWERS: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 16.0, 50.0];
const SWEEP_POINTS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    All,
    Engine,
    Sk,
    Nf,
    Scalar,
    Mc,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "engine" => Ok(Self::Engine),
            "sk" => Ok(Self::Sk),
            "nf" => Ok(Self::Nf),
            "scalar" => Ok(Self::Scalar),
            "mc" => Ok(Self::Mc),
            other => Err(invalid("suite", format!("unknown suite `{other}`"))),
        }
    }
}

/// Deliberate defects used to confirm that the checks can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    #[default]
    None,
    /// Reconstruct the feedback-scheme derivative with `mmse` in place of `mmse / 2`.
    DropHalfMmse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check_id: String,
    pub target: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub gating: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.pass, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        write!(
            f,
            "[{tag}] {:<40} measured={:<12.4e} tolerance={:<9.1e} {}",
            self.check_id, self.measured, self.tolerance, self.target
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    /// True when every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || !c.gating)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.gating && !c.pass)
    }

    /// `{"passed": bool, "checks": [{check_id, target, measured, tolerance, pass, gating}]}`;
    /// unmeasured values serialize as `null`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            passed: bool,
            checks: &'a [Check],
        }
        serde_json::to_string_pretty(&Doc {
            passed: self.passed(),
            checks: &self.checks,
        })
        .expect("serializable report")
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check_id == id)
    }

    fn at_most(&mut self, id: &str, target: &str, measured: Result<f64>, tolerance: f64) {
        self.push(id, target, measured, tolerance, |m, t| m <= t, true);
    }

    fn above(&mut self, id: &str, target: &str, measured: Result<f64>, threshold: f64) {
        self.push(id, target, measured, threshold, |m, t| m > t, true);
    }

    fn below(&mut self, id: &str, target: &str, measured: Result<f64>, threshold: f64) {
        self.push(id, target, measured, threshold, |m, t| m < t, true);
    }

    fn diagnostic(&mut self, id: &str, target: &str, measured: Result<f64>, tolerance: f64) {
        self.push(id, target, measured, tolerance, |m, t| m <= t, false);
    }

    fn push(
        &mut self,
        id: &str,
        target: &str,
        measured: Result<f64>,
        tolerance: f64,
        ok: impl Fn(f64, f64) -> bool,
        gating: bool,
    ) {
        let (measured, target) = match measured {
            Ok(m) => (m, target.to_string()),
            Err(e) => (f64::NAN, format!("{target}; error: {e}")),
        };
        self.checks.push(Check {
            check_id: id.to_string(),
            target,
            measured,
            tolerance,
            pass: measured.is_finite() && ok(measured, tolerance),
            gating,
        });
    }
}

/// `|a - b| / max(|a|, |b|, 1)`.
pub fn mixed_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn run_suite(suite: Suite, fault: Fault) -> VerifyReport {
    let mut report = VerifyReport::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Engine {
        engine_suite(&mut report);
    }
    if all || suite == Suite::Sk {
        sk_suite(&mut report, fault);
    }
    if all || suite == Suite::Nf {
        nf_suite(&mut report);
    }
    if all || suite == Suite::Scalar {
        scalar_suite(&mut report);
    }
    if all || suite == Suite::Mc {
        mc_suite(&mut report);
    }
    report
}

/// Random draws of `(P, n, rho*, gamma)` with `gamma1 = sqrt(P)`.
pub fn random_sk_configs(count: usize, seed: u64) -> Vec<SkConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let power = rng.random_range(0.25..=4.0);
            let n = rng.random_range(5..=40);
            let rho = rng.random_range(0.0..=0.9);
            let gamma = rng.random_range(0.2..=3.0);
            SkConfig::new(power, n, rho, power.sqrt(), gamma).expect("valid draw")
        })
        .collect()
}

pub fn random_nf_configs(count: usize, seed: u64) -> Vec<NfConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            NfConfig::new(
                rng.random_range(0.1..=3.0),
                rng.random_range(0.1..=3.0),
                rng.random_range(0.2..=3.0),
                rng.random_range(0.2..=3.0),
                rng.random_range(1..=6),
            )
            .expect("valid draw")
        })
        .collect()
}

fn reconstructed(r: &DecompositionReport, fault: Fault) -> f64 {
    match fault {
        Fault::None => r.derivative_reconstructed,
        Fault::DropHalfMmse => r.mmse_term + r.interference_term + r.feedback_term,
    }
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values
        .into_iter()
        .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))
}

fn engine_suite(report: &mut VerifyReport) {
    let p = DualScalar::new(2.0, 1.0) * DualScalar::constant(3.0);
    report.at_most(
        "engine.dual_product",
        "(2,1)*(3,0) = (6,3)",
        Ok((p.value - 6.0).abs().max((p.deriv - 3.0).abs())),
        0.0,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let mut random_form = |len: usize| {
        LinearForm::from_coeffs(
            (0..len)
                .map(|_| DualScalar::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    };
    let pairs: Vec<(LinearForm, LinearForm)> =
        (0..50).map(|_| (random_form(9), random_form(9))).collect();

    report.at_most(
        "engine.lmmse_orthogonality",
        "|Cov(x - c y, y)| / Var(x) over 50 random pairs",
        max_of(pairs.iter().map(|(x, y)| {
            let e = lmmse_estimate(x, y)?;
            Ok(covariance(&e.residual, y)?.value.abs() / variance(x).value)
        })),
        1e-12,
    );
    report.at_most(
        "engine.moment_identity",
        "Var(2x - 3y) = 4Var x - 12Cov + 9Var y, relative",
        max_of(pairs.iter().map(|(x, y)| {
            let z = x.combine(DualScalar::constant(2.0), y, DualScalar::constant(-3.0))?;
            let direct = variance(&z).value;
            let expanded =
                4.0 * variance(x).value - 12.0 * covariance(x, y)?.value + 9.0 * variance(y).value;
            Ok(mixed_error(direct, expanded))
        })),
        1e-12,
    );
    report.at_most(
        "engine.dual_vs_fd",
        "|dual - central difference| of I over 20 random feedback configs",
        max_of(random_sk_configs(20, VERIFY_SEED ^ 1).iter().map(|c| {
            let r = analyze(c)?;
            Ok((r.derivative_dual - r.derivative_fd).abs())
        })),
        1e-6,
    );
}

fn step2_error(a: &Step2ClosedForm, b: &Step2ClosedForm) -> f64 {
    [
        (a.kappa1, b.kappa1),
        (a.kappa2, b.kappa2),
        (a.var_y1, b.var_y1),
        (a.var_y2, b.var_y2),
        (a.cov_x12_y2, b.cov_x12_y2),
        (a.mmse2, b.mmse2),
        (a.crosscorr2, b.crosscorr2),
        (a.zeta2, b.zeta2),
    ]
    .iter()
    .map(|&(x, y)| mixed_error(x, y))
    .fold(0.0, f64::max)
}

/// Calibrated sweep reports for each of [`SIGN_POWERS`] over the default range.
pub fn sign_sweeps(n: usize, feedback: Feedback) -> Result<Vec<DecompositionReport>> {
    let mut out = Vec::new();
    for &p in &SIGN_POWERS {
        let (lo, hi) = default_gamma_range(p)?;
        let base = SkConfig::calibrated(p, n)?.with_feedback(feedback);
        for g in gamma_grid(lo, hi, SWEEP_POINTS)? {
            out.push(analyze(&base.with_gamma(g)?)?);
        }
    }
    Ok(out)
}

/// `|I/n - C_sum(P)|` at the calibrated gains.
pub fn capacity_gap(power: f64, n: usize) -> Result<f64> {
    let r = analyze(&SkConfig::calibrated(power, n)?)?;
    Ok((r.mutual_information / n as f64 - sum_capacity(power)?).abs())
}

/// Largest relative spread across uses `2..=n` of the per-use mmse,
/// cross-correlation and feedback contributions at calibration.
pub fn step_spread(power: f64, n: usize) -> Result<f64> {
    let c = SkConfig::calibrated(power, n)?;
    let steps = step_terms(&run_sk_recursion(&c)?, c.gamma)?;
    let tail = &steps[1..];
    let spread = |f: &dyn Fn(&sk::StepTerms) -> f64| {
        let v: Vec<f64> = tail.iter().map(f).collect();
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)
    };
    Ok(spread(&|s| s.mmse_user1)
        .max(spread(&|s| s.crosscorr))
        .max(spread(&|s| s.feedback)))
}

fn sk_suite(report: &mut VerifyReport, fault: Fault) {
    let configs = random_sk_configs(50, VERIFY_SEED);
    let reports: Result<Vec<DecompositionReport>> = configs.iter().map(analyze).collect();
    let reports = reports.as_deref().map_err(Clone::clone);

    report.at_most(
        "sk.identity_dual",
        "relative |dI/dgamma - (mmse/2 + interference + feedback)|, 50 configs",
        reports.clone().map(|rs| {
            rs.iter()
                .map(|r| {
                    (r.derivative_dual - reconstructed(r, fault)).abs() / r.derivative_dual.abs()
                })
                .fold(0.0, f64::max)
        }),
        1e-10,
    );
    report.at_most(
        "sk.identity_fd",
        "|FD(h=1e-5) - (mmse/2 + interference + feedback)|, 50 configs",
        reports.map(|rs| {
            rs.iter()
                .map(|r| (r.derivative_fd - reconstructed(r, fault)).abs())
                .fold(0.0, f64::max)
        }),
        1e-6,
    );
    report.at_most(
        "sk.output_diagonal",
        "max normalized |Cov(Y_i, Y_j)|, i != j, 50 configs",
        max_of(
            configs
                .iter()
                .map(|c| Ok(max_output_correlation(&run_sk_recursion(c)?)?.2)),
        ),
        sk::OUTPUT_DIAGONAL_TOLERANCE,
    );

    let axis = [0.3, 0.7, 1.0, 1.8, 3.0];
    let rhos = [0.0, 0.2, 0.45, 0.7, 0.9];
    let mut grid_err = Ok(0.0_f64);
    for &g in &axis {
        for &g1 in &axis {
            for &r in &rhos {
                grid_err = grid_err.and_then(|acc| {
                    let cf = closed_form_step2(g, g1, r)?;
                    let en = engine_step2(&SkConfig::new(1.0, 3, r, g1, g)?)?;
                    Ok(acc.max(step2_error(&cf, &en)))
                });
            }
        }
    }
    report.at_most(
        "sk.closed_form_step2",
        "closed forms vs engine at use 2, 5x5x5 grid, relative",
        grid_err,
        1e-12,
    );
    report.at_most(
        "sk.step2_spot_values",
        "kappa1 = 1/3, var_y1 = 3, zeta2 = 1/3 at gamma = gamma1 = 1, rho = 0",
        closed_form_step2(1.0, 1.0, 0.0).map(|c| {
            (c.kappa1 - 1.0 / 3.0)
                .abs()
                .max((c.var_y1 - 3.0).abs())
                .max((c.zeta2 - 1.0 / 3.0).abs())
        }),
        1e-15,
    );
    report.at_most(
        "sk.rho_star_residual",
        "|(1+(1-r^2)P)^2 - (1+2P(1+r))| for P in {0.5, 1, 2, 5}",
        max_of(
            [0.5, 1.0, 2.0, 5.0]
                .iter()
                .map(|&p| Ok(sk::rho_star_residual(p, solve_rho_star(p)?).abs())),
        ),
        1e-12,
    );

    let sweeps = sign_sweeps(10, Feedback::Enabled);
    report.above(
        "sk.feedback_positive",
        "min feedback term over calibrated sweeps > 0",
        sweeps
            .clone()
            .map(|rs| rs.iter().map(|r| r.feedback_term).fold(f64::MAX, f64::min)),
        0.0,
    );
    report.below(
        "sk.interference_negative",
        "max interference term over calibrated sweeps < 0",
        sweeps.map(|rs| {
            rs.iter()
                .map(|r| r.interference_term)
                .fold(f64::MIN, f64::max)
        }),
        0.0,
    );
    report.at_most(
        "sk.feedback_disabled_zero",
        "max |feedback term| with frozen encoders",
        sign_sweeps(10, Feedback::Disabled)
            .map(|rs| rs.iter().map(|r| r.feedback_term.abs()).fold(0.0, f64::max)),
        0.0,
    );
    report.at_most(
        "sk.mi_monotone",
        "largest decrease of I between consecutive sweep points",
        default_gamma_range(1.0)
            .and_then(|(lo, hi)| sk::sk_sweep(1.0, 10, &gamma_grid(lo, hi, SWEEP_POINTS)?))
            .map(|rs| {
                rs.windows(2)
                    .map(|w| w[0].mutual_information - w[1].mutual_information)
                    .fold(0.0, f64::max)
            }),
        0.0,
    );
    let gaps = [10, 20, 50].map(|n| capacity_gap(1.0, n));
    report.at_most(
        "sk.capacity_gap_n50",
        "|I/n - C_sum| at n = 50, P = 1",
        gaps[2].clone(),
        0.02,
    );
    report.below(
        "sk.capacity_gap_decreasing",
        "max over n in (10, 20, 50) of gap(n_next) - gap(n)",
        gaps[0].clone().and_then(|g10| {
            let g20 = gaps[1].clone()?;
            let g50 = gaps[2].clone()?;
            Ok((g20 - g10).max(g50 - g20))
        }),
        0.0,
    );
    report.diagnostic(
        "sk.step_stationarity",
        "relative spread of per-use terms over uses 2..n at calibration",
        step_spread(1.0, 10),
        1e-9,
    );
    report.diagnostic(
        "sk.power_constraint",
        "max |gamma Var(X1_i) - P| / P over uses 2..n at calibration",
        SkConfig::calibrated(1.0, 10).and_then(|c| {
            let steps = step_terms(&run_sk_recursion(&c)?, c.gamma)?;
            Ok(steps[1..]
                .iter()
                .map(|s| (c.gamma * s.var_x1 - c.power).abs() / c.power)
                .fold(0.0, f64::max))
        }),
        1e-9,
    );
}

fn nf_suite(report: &mut VerifyReport) {
    let mut err = Ok(0.0_f64);
    for g in [0.3, 1.0, 2.5] {
        for s2 in [0.2, 1.0, 4.0] {
            err = err.and_then(|acc| {
                let c = nf_closed_forms(g, s2)?;
                let r = nf_exact(&NfConfig::symmetric(g, s2, 3)?)?.per_use();
                Ok(acc
                    .max(mixed_error(g * r.mmse_term, c.mmse_scaled))
                    .max(mixed_error(r.interference_term, c.interference))
                    .max(mixed_error(r.mutual_information, c.mutual_information)))
            });
        }
    }
    report.at_most(
        "nf.closed_forms",
        "engine vs closed forms, relative",
        err,
        1e-12,
    );
    report.at_most(
        "nf.unit_triple",
        "(4/3, -2/3, ln(3)/2) at gamma = sigma2 = 1",
        nf_closed_forms(1.0, 1.0).map(|c| {
            (c.mmse_scaled - 4.0 / 3.0)
                .abs()
                .max((c.interference + 2.0 / 3.0).abs())
                .max((c.mutual_information - 0.5 * 3f64.ln()).abs())
        }),
        1e-15,
    );
    report.at_most(
        "nf.identity_fd_symmetric",
        "|gamma mmse + interference - d/dgamma ln(1+2 gamma^2 s2)/2|",
        max_of([0.3, 1.0, 2.5].iter().flat_map(|&g| {
            [0.2, 1.0, 4.0].map(move |s2| {
                let r = nf_exact(&NfConfig::symmetric(g, s2, 1)?)?;
                let h = 1e-5;
                let mi = |x: f64| 0.5 * (2.0 * x * x * s2).ln_1p();
                let fd = (mi(g + h) - mi(g - h)) / (2.0 * h);
                Ok((r.derivative_reconstructed - fd).abs())
            })
        })),
        1e-6,
    );
    let configs = random_nf_configs(50, VERIFY_SEED);
    report.at_most(
        "nf.identity_dual",
        "|dual - reconstructed|, relative, common and per-user gains, 50 configs",
        max_of(configs.iter().flat_map(|c| {
            [0usize, 1, 2].map(move |u| {
                let r = if u == 0 {
                    nf_exact(c)?
                } else {
                    nf_per_user_gradient(c, u)?
                };
                Ok(mixed_error(r.derivative_dual, r.derivative_reconstructed))
            })
        })),
        1e-12,
    );
    report.at_most(
        "nf.identity_fd",
        "|FD(h=1e-6) - reconstructed|, common and per-user gains, 50 configs",
        max_of(configs.iter().flat_map(|c| {
            [0usize, 1, 2].map(move |u| {
                let r = if u == 0 {
                    nf_exact(c)?
                } else {
                    nf_per_user_gradient(c, u)?
                };
                Ok((r.derivative_fd - r.derivative_reconstructed).abs())
            })
        })),
        1e-6,
    );
    report.at_most(
        "nf.per_user_example",
        "dI/dgamma_1 = 1/3 at unit gains and variances",
        NfConfig::symmetric(1.0, 1.0, 1)
            .and_then(|c| nf_per_user_gradient(&c, 1))
            .map(|r| {
                (r.derivative_reconstructed - 1.0 / 3.0)
                    .abs()
                    .max((r.derivative_fd - 1.0 / 3.0).abs())
            }),
        1e-8,
    );
    report.at_most(
        "nf.single_user",
        "|dI/dgamma_1 - gamma s2/(1+gamma^2 s2)| with user 2 silent",
        NfConfig::new(0.8, 0.0, 1.7, 1.0, 1)
            .and_then(|c| nf_per_user_gradient(&c, 1))
            .map(|r| (r.derivative_reconstructed - 1.7 * 0.8 / (1.0 + 1.7 * 1.7 * 0.8)).abs()),
        1e-12,
    );
    report.above(
        "nf.signs",
        "min over configs of min(gamma mmse, -interference) > 0",
        configs
            .iter()
            .map(|c| nf_exact(c).map(|r| (c.gamma_1 * r.mmse_term).min(-r.interference_term)))
            .try_fold(f64::MAX, |acc, v| v.map(|v| acc.min(v))),
        0.0,
    );
    report.diagnostic(
        "nf.per_user_all_k",
        "|FD - (gamma_l mmse_l + sum over all k)|; the k = l term double counts",
        NfConfig::symmetric(1.0, 1.0, 1).and_then(|c| {
            let r = nf_per_user_gradient(&c, 1)?;
            let all_k = nf_per_user_interference_all_k(&c, 1)?;
            Ok((r.derivative_fd - (r.gamma * r.mmse_term + all_k)).abs())
        }),
        1e-6,
    );
}

/// Tolerance of the grid gradient checks against finite differences.
pub const LAB_FD_TOLERANCE: f64 = 5e-3;

/// `(name, |palomar - FD|)` for every naive candidate on the multiplicative
/// channel at `gamma`, standard Gaussian prior.
pub fn converse_misses(gamma: f64) -> Result<Vec<(&'static str, f64)>> {
    let prior = GaussianPrior::standard();
    let ch = ScalarChannel::Multiplicative;
    let grid = GridSpec::auto(&prior, ch, gamma)?;
    let fd = finite_diff_mi(&prior, ch, gamma, &grid, lab::DEFAULT_FD_STEP)?;
    lab::multiplicative_xi_candidates()
        .iter()
        .map(|&(name, xi)| {
            let p = gradient_palomar(&prior, ch, gamma, &grid, &xi)?;
            Ok((name, (p - fd).abs()))
        })
        .collect()
}

fn scalar_suite(report: &mut VerifyReport) {
    let prior = GaussianPrior::standard();
    let linear = ScalarChannel::Additive(AdditiveMap::Linear);

    report.at_most(
        "scalar.gaussian_mi",
        "|I - ln(2)/2|, Gaussian prior, gamma = 1",
        GridSpec::auto(&prior, linear, 1.0)
            .and_then(|g| build_joint(&prior, linear, 1.0, &g))
            .map(|j| (lab::mutual_information(&j) - 0.5 * 2f64.ln()).abs()),
        1e-4,
    );
    for gamma in [0.5, 1.0, 2.0] {
        let outcome = GridSpec::auto(&prior, linear, gamma).and_then(|grid| {
            let g = gradient_general(&prior, linear, gamma, &grid)?;
            let joint = build_joint(&prior, linear, gamma, &grid)?;
            let mmse = lab::mmse_grid(&joint);
            let score = lab::posterior_log_gradient(&joint);
            Ok((
                g,
                mmse,
                lab::score_conditional_mean_residual(&joint, &score),
            ))
        });
        report.at_most(
            &format!("scalar.i_mmse[gamma={gamma}]"),
            "|gradient_general - gamma mmse|",
            outcome.clone().map(|(g, m, _)| (g - gamma * m).abs()),
            LAB_FD_TOLERANCE,
        );
        report.at_most(
            &format!("scalar.analytic[gamma={gamma}]"),
            "|gradient_general - gamma/(1+gamma^2)|",
            outcome
                .clone()
                .map(|(g, _, _)| (g - gamma / (1.0 + gamma * gamma)).abs()),
            LAB_FD_TOLERANCE,
        );
        report.at_most(
            &format!("scalar.score_mean[gamma={gamma}]"),
            "max over y of |int p score dx|",
            outcome.map(|(_, _, z)| z),
            1e-6,
        );
    }

    let gamma = 1.0;
    for map in [
        AdditiveMap::Linear,
        AdditiveMap::Quadratic,
        AdditiveMap::Tanh,
    ] {
        let ch = ScalarChannel::Additive(map);
        let outcome = GridSpec::auto(&prior, ch, gamma).and_then(|grid| {
            let general = gradient_general(&prior, ch, gamma, &grid)?;
            let xi = |x: f64| map.dk_dgamma(x, gamma);
            let palomar = gradient_palomar(&prior, ch, gamma, &grid, &xi)?;
            let fd = finite_diff_mi(&prior, ch, gamma, &grid, lab::DEFAULT_FD_STEP)?;
            Ok((general, palomar, fd))
        });
        report.at_most(
            &format!("scalar.palomar_plumbing[{map:?}]"),
            "|palomar(xi = dk/dgamma) - general|",
            outcome.clone().map(|(g, p, _)| (g - p).abs()),
            1e-6,
        );
        report.at_most(
            &format!("scalar.palomar_vs_fd[{map:?}]"),
            "|palomar(xi = dk/dgamma) - FD|",
            outcome.map(|(_, p, fd)| (p - fd).abs()),
            LAB_FD_TOLERANCE,
        );
    }

    let mult = ScalarChannel::Multiplicative;
    report.at_most(
        "scalar.multiplicative_general_vs_fd",
        "|gradient_general - FD| for y = gamma x w",
        GridSpec::auto(&prior, mult, gamma).and_then(|grid| {
            let g = gradient_general(&prior, mult, gamma, &grid)?;
            let fd = finite_diff_mi(&prior, mult, gamma, &grid, lab::DEFAULT_FD_STEP)?;
            Ok((g - fd).abs())
        }),
        LAB_FD_TOLERANCE,
    );
    report.above(
        "scalar.multiplicative_converse",
        "min over naive xi of |palomar - FD| > 10x FD tolerance",
        converse_misses(gamma).map(|m| m.iter().map(|(_, d)| *d).fold(f64::MAX, f64::min)),
        10.0 * LAB_FD_TOLERANCE,
    );
}

fn mc_suite(report: &mut VerifyReport) {
    let outcome = (|| -> Result<_> {
        let sk = SkConfig::calibrated(1.0, 10)?;
        let mc = McConfig::new(100_000, MC_SEED)?;
        let a = simulate_sk_mc(&sk, &mc)?;
        let b = simulate_sk_mc(&sk, &mc)?;
        Ok((analyze(&sk)?, a, b))
    })();
    let z = |f: fn(&DecompositionReport) -> f64, se: fn(&crate::mc::McReport) -> f64| {
        outcome
            .clone()
            .map(|(exact, a, _)| (f(&a.report) - f(&exact)).abs() / se(&a))
    };
    report.at_most(
        "mc.mmse",
        "|MC - exact| / SE, P = 1, n = 10, 1e5 samples",
        z(|r| r.mmse_term, |m| m.mmse_se),
        3.0,
    );
    report.at_most(
        "mc.interference",
        "|MC - exact| / SE",
        z(|r| r.interference_term, |m| m.interference_se),
        3.0,
    );
    report.at_most(
        "mc.feedback",
        "|MC - exact| / SE",
        z(|r| r.feedback_term, |m| m.feedback_se),
        3.0,
    );
    report.at_most(
        "mc.deterministic",
        "number of differing fields between two runs with one seed",
        outcome.map(|(_, a, b)| if a == b { 0.0 } else { 1.0 }),
        0.0,
    );
    report.at_most(
        "mc.se_scaling",
        "|SE(1e4)/SE(1e6) - 10| / 10",
        (|| -> Result<f64> {
            let sk = SkConfig::calibrated(1.0, 10)?;
            let small = simulate_sk_mc(&sk, &McConfig::new(10_000, MC_SEED)?)?;
            let large = simulate_sk_mc(&sk, &McConfig::new(1_000_000, MC_SEED)?)?;
            Ok((small.mmse_se / large.mmse_se - 10.0).abs() / 10.0)
        })(),
        0.2,
    );
    report.at_most(
        "mc.independent_users",
        "|interference| / SE at rho* = 0, gamma = gamma1 = 1, n = 2",
        (|| -> Result<f64> {
            // with rho* = 0 the errors stay uncorrelated only through use 2 at unit gains
            let sk = SkConfig::new(1.0, 2, 0.0, 1.0, 1.0)?;
            let r = simulate_sk_mc(&sk, &McConfig::new(100_000, MC_SEED)?)?;
            Ok(r.report.interference_term.abs() / r.interference_se)
        })(),
        3.0,
    );
}
