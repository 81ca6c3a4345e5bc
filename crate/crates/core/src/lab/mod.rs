//! Grid laboratory for scalar channels without feedback.
//!
//! Densities are sampled on a rectangular grid, integrals use the composite
//! trapezoid rule and derivatives in `y` use central differences. The
//! general gradient
//!
//! ```text
//! dI/dgamma = E{ df/dgamma * d/dy ln p(x | y) }
//! ```
//!
//! is compared with a finite difference of the grid mutual information, and
//! with the factorized form in which `df/dgamma` is replaced by a function
//! `xi(x)` of the input alone.

pub mod channel;
pub mod grid;
pub mod prior;

pub use channel::{AdditiveMap, ScalarChannel};
pub use grid::{build_joint, GridDensity2D, GridSpec};
pub use prior::{GaussianMixture, GaussianPrior, Prior};

use crate::error::{invalid, Result};

/// Floor applied to densities before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Default step of [`finite_diff_mi`].
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Trapezoidal `I(X; Y)` in nats.
pub fn mutual_information(joint: &GridDensity2D) -> f64 {
    let (px, py) = (joint.marginal_x(), joint.marginal_y());
    joint.integrate(|ix, iy, p| {
        let q = px[ix] * py[iy];
        if p > 0.0 && q > 0.0 {
            p * (p / q).ln()
        } else {
            0.0
        }
    })
}

/// `d/dy ln p(x | y)` at every grid node, row-major with `x` as the slow
/// index.
///
/// The `y`-derivative of `ln p(x, y)` is taken by central differences
/// (one-sided at the edges). Subtracting its posterior mean at each `y`
/// removes `d/dy ln p(y)`, which leaves a score whose trapezoidal mean over
/// `x` vanishes on every `y` slice.
pub fn posterior_log_gradient(joint: &GridDensity2D) -> Vec<f64> {
    let grid = &joint.grid;
    let (nx, ny, dy) = (grid.nx, grid.ny, grid.dy());
    let mut score = vec![0.0; nx * ny];
    for ix in 0..nx {
        let logs: Vec<f64> = joint
            .row(ix)
            .iter()
            .map(|p| p.max(DENSITY_FLOOR).ln())
            .collect();
        let out = &mut score[ix * ny..(ix + 1) * ny];
        out[0] = (logs[1] - logs[0]) / dy;
        out[ny - 1] = (logs[ny - 1] - logs[ny - 2]) / dy;
        for iy in 1..ny - 1 {
            out[iy] = (logs[iy + 1] - logs[iy - 1]) / (2.0 * dy);
        }
    }
    let wx = joint.x_weights();
    for iy in 0..ny {
        let (mut num, mut den) = (0.0, 0.0);
        for ix in 0..nx {
            let w = wx[ix] * joint.at(ix, iy);
            num += w * score[ix * ny + iy];
            den += w;
        }
        let mean = if den > 0.0 { num / den } else { 0.0 };
        for ix in 0..nx {
            score[ix * ny + iy] -= mean;
        }
    }
    score
}

/// Largest `|int p(x, y) score(x, y) dx|` over the `y` slices.
pub fn score_conditional_mean_residual(joint: &GridDensity2D, score: &[f64]) -> f64 {
    let (nx, ny) = (joint.grid.nx, joint.grid.ny);
    let wx = joint.x_weights();
    (0..ny)
        .map(|iy| {
            (0..nx)
                .map(|ix| wx[ix] * joint.at(ix, iy) * score[ix * ny + iy])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// `E{(X - E{X | Y})^2}` on the grid.
pub fn mmse_grid(joint: &GridDensity2D) -> f64 {
    let (nx, ny) = (joint.grid.nx, joint.grid.ny);
    let (xs, wx, wy) = (joint.grid.xs(), joint.x_weights(), joint.y_weights());
    let mut total = 0.0;
    for (iy, &w) in wy.iter().enumerate().take(ny) {
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for ix in 0..nx {
            let p = wx[ix] * joint.at(ix, iy);
            m0 += p;
            m1 += p * xs[ix];
            m2 += p * xs[ix] * xs[ix];
        }
        if m0 > 0.0 {
            total += w * (m2 - m1 * m1 / m0);
        }
    }
    total
}

/// `E{g(x, y) * d/dy ln p(x | y)}` for a given score array.
pub fn score_expectation(
    joint: &GridDensity2D,
    score: &[f64],
    g: impl Fn(f64, f64) -> f64 + Sync,
) -> f64 {
    let (xs, ys) = (joint.grid.xs(), joint.grid.ys());
    let ny = joint.grid.ny;
    joint.integrate(|ix, iy, p| {
        if p > 0.0 {
            p * g(xs[ix], ys[iy]) * score[ix * ny + iy]
        } else {
            0.0
        }
    })
}

/// Grid evaluation of `E{df/dgamma * d/dy ln p(x | y)}`.
pub fn gradient_general(
    prior: &dyn Prior,
    channel: ScalarChannel,
    gamma: f64,
    grid: &GridSpec,
) -> Result<f64> {
    let joint = build_joint(prior, channel, gamma, grid)?;
    let score = posterior_log_gradient(&joint);
    Ok(score_expectation(&joint, &score, |x, y| {
        channel.df_dgamma(x, y, gamma)
    }))
}

/// Grid evaluation of `E{xi(X) * d/dy ln p(X | Y)}`.
pub fn gradient_palomar(
    prior: &dyn Prior,
    channel: ScalarChannel,
    gamma: f64,
    grid: &GridSpec,
    xi: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<f64> {
    let joint = build_joint(prior, channel, gamma, grid)?;
    let score = posterior_log_gradient(&joint);
    Ok(score_expectation(&joint, &score, |x, _| xi(x)))
}

/// Central difference of the grid mutual information, with the grid held
/// fixed.
pub fn finite_diff_mi(
    prior: &dyn Prior,
    channel: ScalarChannel,
    gamma: f64,
    grid: &GridSpec,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("{h} is not a positive step")));
    }
    if !channel.admits(gamma - h) || !channel.admits(gamma + h) {
        return Err(invalid(
            "h",
            format!("gamma {gamma} +- {h} leaves the channel domain"),
        ));
    }
    let up = mutual_information(&build_joint(prior, channel, gamma + h, grid)?);
    let down = mutual_information(&build_joint(prior, channel, gamma - h, grid)?);
    Ok((up - down) / (2.0 * h))
}

/// A named candidate for `xi(x)`.
pub type XiCandidate = (&'static str, fn(f64) -> f64);

/// Input-only functions tried in place of `df/dgamma = x w` for the
/// multiplicative channel. The first one averages the noise out.
pub fn multiplicative_xi_candidates() -> [XiCandidate; 5] {
    [
        ("x*E[W]", |_| 0.0),
        ("x", |x| x),
        ("x^2", |x| x * x),
        ("|x|", f64::abs),
        ("tanh(x)", f64::tanh),
    ]
}
