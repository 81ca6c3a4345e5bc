//! Rectangular grids and discretized joint densities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::ScalarChannel;
use super::prior::{Prior, COVERAGE_SIGMAS};
use crate::error::{invalid, Error, Result};

pub const MIN_NODES: usize = 64;
/// Tolerance on the trapezoidal mass of the prior over the x-range.
pub const PRIOR_MASS_TOLERANCE: f64 = 1e-8;
/// Largest fraction of conditional mass allowed to fall outside the y-range.
pub const MAX_LEAKED_MASS: f64 = 1e-4;
/// Half-width of the excluded input band, in prior standard deviations.
pub const MULTIPLICATIVE_BAND: f64 = 0.05;

const ADDITIVE_NX: usize = 401;
const ADDITIVE_MAX_DY: f64 = 0.05;
const MULTIPLICATIVE_NX: usize = 1201;
const MULTIPLICATIVE_NY: usize = 2401;
const MULTIPLICATIVE_Y_SIGMAS: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Inputs with `|x| < x_exclusion` carry no mass.
    pub x_exclusion: f64,
}

impl GridSpec {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let grid = Self {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            nx,
            ny,
            x_exclusion: 0.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_exclusion(self, half_width: f64) -> Result<Self> {
        let grid = Self {
            x_exclusion: half_width,
            ..self
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid covering six standard deviations of the prior and of the output
    /// marginal. Multiplicative channels get a finer input grid and an
    /// excluded band around `x = 0`.
    pub fn auto(prior: &dyn Prior, channel: ScalarChannel, gamma: f64) -> Result<Self> {
        let x = prior.support();
        match channel {
            ScalarChannel::Additive(map) => {
                let probe = Self::new(x, (-1.0, 1.0), ADDITIVE_NX, MIN_NODES)?;
                let xs = probe.xs();
                let w = trapezoid_weights(ADDITIVE_NX, probe.dx());
                let mut mass = 0.0;
                let mut k2 = 0.0;
                let mut k1 = 0.0;
                for (i, &xi) in xs.iter().enumerate() {
                    let p = w[i] * prior.density(xi);
                    let k = map.k(xi, gamma);
                    mass += p;
                    k1 += p * k;
                    k2 += p * k * k;
                }
                let (mean, var) = (k1 / mass, k2 / mass - (k1 / mass).powi(2));
                let half = COVERAGE_SIGMAS * (var.max(0.0) + 1.0).sqrt();
                let ny = (((2.0 * half) / ADDITIVE_MAX_DY).ceil() as usize + 1).max(MIN_NODES);
                Self::new(x, (mean - half, mean + half), ADDITIVE_NX, ny)
            }
            ScalarChannel::Multiplicative => {
                if !channel.admits(gamma) {
                    return Err(invalid(
                        "gamma",
                        format!("{gamma} outside the channel domain"),
                    ));
                }
                let sd = prior.variance().sqrt();
                let half = MULTIPLICATIVE_Y_SIGMAS
                    * gamma
                    * (prior.variance() + prior.mean().powi(2)).sqrt();
                Self::new(x, (-half, half), MULTIPLICATIVE_NX, MULTIPLICATIVE_NY)?
                    .with_exclusion(MULTIPLICATIVE_BAND * sd)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_NODES || self.ny < MIN_NODES {
            return Err(invalid(
                "grid",
                format!(
                    "{}x{} nodes, need at least {MIN_NODES} per axis",
                    self.nx, self.ny
                ),
            ));
        }
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(invalid("grid", "ranges must be finite and increasing"));
        }
        if !(self.x_exclusion >= 0.0) {
            return Err(invalid(
                "x_exclusion",
                format!("{} is negative", self.x_exclusion),
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nx).map(|i| self.x_min + i as f64 * dx).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        let dy = self.dy();
        (0..self.ny).map(|j| self.y_min + j as f64 * dy).collect()
    }

    pub fn is_excluded(&self, x: f64) -> bool {
        x.abs() < self.x_exclusion
    }
}

/// Composite trapezoid weights for `n` equally spaced nodes.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Joint density sampled on a [`GridSpec`], stored row-major with `x` as
/// the slow index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDensity2D {
    pub grid: GridSpec,
    values: Vec<f64>,
    /// Prior mass removed by the exclusion band.
    pub excluded_mass: f64,
    /// Fraction of mass lost outside the y-range before renormalization.
    pub leaked_mass: f64,
}

impl GridDensity2D {
    /// Samples `f(x, y)` on the grid and renormalizes it to unit mass.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let mut joint = Self::sample(grid, |_, x, y| f(x, y))?;
        joint.normalize()?;
        Ok(joint)
    }

    fn sample(grid: GridSpec, f: impl Fn(usize, f64, f64) -> f64 + Sync) -> Result<Self> {
        grid.validate()?;
        let (xs, ys) = (grid.xs(), grid.ys());
        let mut values = vec![0.0; grid.nx * grid.ny];
        values
            .par_chunks_mut(grid.ny)
            .enumerate()
            .for_each(|(ix, row)| {
                for (v, &y) in row.iter_mut().zip(&ys) {
                    *v = f(ix, xs[ix], y);
                }
            });
        let joint = Self {
            grid,
            values,
            excluded_mass: 0.0,
            leaked_mass: 0.0,
        };
        joint.check_values()?;
        Ok(joint)
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.total_mass();
        if !(mass > 0.0) {
            return Err(Error::UnnormalizedPrior { mass });
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(())
    }

    fn check_values(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !(*v >= 0.0) || !v.is_finite())
        {
            Some(k) => Err(Error::InvalidDensity {
                ix: k / self.grid.ny,
                iy: k % self.grid.ny,
                value: self.values[k],
            }),
            None => Ok(()),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid.ny + iy]
    }

    pub fn row(&self, ix: usize) -> &[f64] {
        &self.values[ix * self.grid.ny..(ix + 1) * self.grid.ny]
    }

    pub fn x_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.grid.nx, self.grid.dx())
    }

    pub fn y_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.grid.ny, self.grid.dy())
    }

    /// Trapezoidal double integral.
    pub fn total_mass(&self) -> f64 {
        self.integrate(|_, _, p| p)
    }

    /// Trapezoidal integral of `g(ix, iy, p(x, y))` over the grid.
    pub fn integrate(&self, g: impl Fn(usize, usize, f64) -> f64 + Sync) -> f64 {
        let (wx, wy) = (self.x_weights(), self.y_weights());
        let rows: Vec<f64> = (0..self.grid.nx)
            .into_par_iter()
            .map(|ix| {
                self.row(ix)
                    .iter()
                    .zip(&wy)
                    .enumerate()
                    .map(|(iy, (&p, &w))| w * g(ix, iy, p))
                    .sum::<f64>()
                    * wx[ix]
            })
            .collect();
        rows.iter().sum()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        let wy = self.y_weights();
        (0..self.grid.nx)
            .map(|ix| self.row(ix).iter().zip(&wy).map(|(p, w)| p * w).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let wx = self.x_weights();
        let mut out = vec![0.0; self.grid.ny];
        for (ix, w) in wx.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.row(ix)) {
                *o += w * p;
            }
        }
        out
    }

    /// The density of `(-X, Y)`. Requires a grid symmetric in `x`.
    pub fn mirrored_x(&self) -> Result<Self> {
        if (self.grid.x_min + self.grid.x_max).abs() > 1e-12 * self.grid.x_max.abs() {
            return Err(invalid("grid", "x-range is not symmetric about zero"));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for ix in (0..self.grid.nx).rev() {
            values.extend_from_slice(self.row(ix));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }
}

/// Samples `prior(x) p(y | x)` on `grid` and renormalizes.
///
/// Fails if the prior does not integrate to one over the x-range, or if more
/// than [`MAX_LEAKED_MASS`] of the conditional mass falls outside the
/// y-range.
pub fn build_joint(
    prior: &dyn Prior,
    channel: ScalarChannel,
    gamma: f64,
    grid: &GridSpec,
) -> Result<GridDensity2D> {
    grid.validate()?;
    if !channel.admits(gamma) {
        return Err(invalid(
            "gamma",
            format!("{gamma} outside the channel domain"),
        ));
    }
    let xs = grid.xs();
    let wx = trapezoid_weights(grid.nx, grid.dx());
    let prior_values: Vec<f64> = xs.iter().map(|&x| prior.density(x)).collect();
    let prior_mass: f64 = prior_values.iter().zip(&wx).map(|(p, w)| p * w).sum();
    if (prior_mass - 1.0).abs() > PRIOR_MASS_TOLERANCE {
        return Err(Error::UnnormalizedPrior { mass: prior_mass });
    }
    let kept: Vec<f64> = xs
        .iter()
        .zip(&prior_values)
        .map(|(&x, &p)| if grid.is_excluded(x) { 0.0 } else { p })
        .collect();
    let kept_mass: f64 = kept.iter().zip(&wx).map(|(p, w)| p * w).sum();
    let mut joint = GridDensity2D::sample(*grid, |ix, x, y| {
        if kept[ix] == 0.0 {
            0.0
        } else {
            kept[ix] * channel.conditional_density(y, x, gamma)
        }
    })?;
    joint.excluded_mass = prior_mass - kept_mass;
    joint.leaked_mass = 1.0 - joint.total_mass() / kept_mass;
    if joint.leaked_mass > MAX_LEAKED_MASS {
        return Err(Error::MassLeak {
            leaked: joint.leaked_mass,
        });
    }
    joint.normalize()?;
    Ok(joint)
}

#[cfg(test)]
mod tests {
    use super::super::channel::AdditiveMap;
    use super::super::prior::GaussianPrior;
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 10, 100).is_err());
        assert!(GridSpec::new((1.0, -1.0), (-1.0, 1.0), 100, 100).is_err());
        assert!(GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 100, 100).is_ok());
    }

    #[test]
    fn joint_has_unit_mass() {
        let prior = GaussianPrior::standard();
        let ch = ScalarChannel::Additive(AdditiveMap::Linear);
        let grid = GridSpec::auto(&prior, ch, 1.0).unwrap();
        let j = build_joint(&prior, ch, 1.0, &grid).unwrap();
        assert!((j.total_mass() - 1.0).abs() < 1e-6);
        assert!(j.leaked_mass.abs() < 1e-6);
        assert_eq!(j.excluded_mass, 0.0);
    }

    #[test]
    fn zero_gain_gives_independent_joint() {
        let prior = GaussianPrior::standard();
        let ch = ScalarChannel::Additive(AdditiveMap::Linear);
        let grid = GridSpec::auto(&prior, ch, 0.0).unwrap();
        let j = build_joint(&prior, ch, 0.0, &grid).unwrap();
        let (px, py) = (j.marginal_x(), j.marginal_y());
        for ix in (0..grid.nx).step_by(37) {
            for iy in (0..grid.ny).step_by(23) {
                assert!((j.at(ix, iy) - px[ix] * py[iy]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn multiplicative_grid_reports_excluded_band() {
        let prior = GaussianPrior::standard();
        let ch = ScalarChannel::Multiplicative;
        let grid = GridSpec::auto(&prior, ch, 1.0).unwrap();
        let j = build_joint(&prior, ch, 1.0, &grid).unwrap();
        assert!(j.excluded_mass > 0.03 && j.excluded_mass < 0.05);
        assert!(j.leaked_mass < MAX_LEAKED_MASS);
        assert!((j.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_prior_range_is_rejected() {
        let prior = GaussianPrior::standard();
        let ch = ScalarChannel::Additive(AdditiveMap::Linear);
        let grid = GridSpec::new((-2.0, 2.0), (-8.0, 8.0), 101, 101).unwrap();
        assert!(matches!(
            build_joint(&prior, ch, 1.0, &grid),
            Err(Error::UnnormalizedPrior { .. })
        ));
    }

    #[test]
    fn narrow_output_range_leaks() {
        let prior = GaussianPrior::standard();
        let ch = ScalarChannel::Additive(AdditiveMap::Linear);
        let grid = GridSpec::new((-6.0, 6.0), (-2.0, 2.0), 101, 101).unwrap();
        assert!(matches!(
            build_joint(&prior, ch, 1.0, &grid),
            Err(Error::MassLeak { .. })
        ));
    }

    #[test]
    fn negative_density_is_reported() {
        let grid = GridSpec::new((-1.0, 1.0), (-1.0, 1.0), 64, 64).unwrap();
        let err = GridDensity2D::from_fn(grid, |x, _| if x > 0.5 { -1.0 } else { 1.0 });
        assert!(matches!(err, Err(Error::InvalidDensity { .. })));
    }
}
