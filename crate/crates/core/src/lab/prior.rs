//! One-dimensional input densities for the scalar lab.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Number of standard deviations a grid must cover on each side.
pub const COVERAGE_SIGMAS: f64 = 6.0;

/// A channel-input density with a finite second moment.
pub trait Prior: Sync {
    fn density(&self, x: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    /// Interval holding all but a negligible fraction of the mass.
    fn support(&self) -> (f64, f64);
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() || !mean.is_finite() {
            return Err(invalid(
                "variance",
                format!("N({mean}, {variance}) is not a density"),
            ));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self {
            mean: 0.0,
            variance: 1.0,
        }
    }
}

impl Prior for GaussianPrior {
    fn density(&self, x: f64) -> f64 {
        let sd = self.variance.sqrt();
        normal_pdf((x - self.mean) / sd) / sd
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn variance(&self) -> f64 {
        self.variance
    }

    fn support(&self) -> (f64, f64) {
        let half = COVERAGE_SIGMAS * self.variance.sqrt();
        (self.mean - half, self.mean + half)
    }
}

/// Finite mixture of Gaussians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<(f64, GaussianPrior)>,
}

impl GaussianMixture {
    /// Weights must be positive; they are normalized to sum to one.
    pub fn new(components: Vec<(f64, GaussianPrior)>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("components", "empty mixture"));
        }
        if components
            .iter()
            .any(|(w, _)| !(*w > 0.0) || !w.is_finite())
        {
            return Err(invalid("components", "weights must be positive"));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        Ok(Self {
            components: components
                .into_iter()
                .map(|(w, g)| (w / total, g))
                .collect(),
        })
    }

    /// Equal-weight pair `N(-a, s2)` and `N(a, s2)`.
    pub fn symmetric_pair(offset: f64, variance: f64) -> Result<Self> {
        Self::new(vec![
            (1.0, GaussianPrior::new(-offset, variance)?),
            (1.0, GaussianPrior::new(offset, variance)?),
        ])
    }
}

impl Prior for GaussianMixture {
    fn density(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, g)| w * g.density(x)).sum()
    }

    fn mean(&self) -> f64 {
        self.components.iter().map(|(w, g)| w * g.mean).sum()
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        self.components
            .iter()
            .map(|(w, g)| w * (g.variance + (g.mean - m).powi(2)))
            .sum()
    }

    fn support(&self) -> (f64, f64) {
        self.components
            .iter()
            .map(|(_, g)| g.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_moments() {
        let m = GaussianMixture::symmetric_pair(1.0, 0.25).unwrap();
        assert_eq!(m.mean(), 0.0);
        assert!((m.variance() - 1.25).abs() < 1e-15);
        assert_eq!(m.support(), (-4.0, 4.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianPrior::new(0.0, 0.0).is_err());
        assert!(GaussianMixture::new(vec![]).is_err());
        assert!(GaussianMixture::new(vec![(-1.0, GaussianPrior::standard())]).is_err());
    }
}
