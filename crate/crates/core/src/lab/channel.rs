//! Scalar channels `y = f(x, w, gamma)` with unit Gaussian noise `w`.

use serde::{Deserialize, Serialize};

use super::prior::normal_pdf;

/// The deterministic part `k(x, gamma)` of an additive channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdditiveMap {
    /// `gamma x`
    Linear,
    /// `gamma^2 x`
    Quadratic,
    /// `gamma tanh(x)`
    Tanh,
}

impl AdditiveMap {
    pub fn k(self, x: f64, gamma: f64) -> f64 {
        match self {
            Self::Linear => gamma * x,
            Self::Quadratic => gamma * gamma * x,
            Self::Tanh => gamma * x.tanh(),
        }
    }

    /// `dk/dgamma`.
    pub fn dk_dgamma(self, x: f64, gamma: f64) -> f64 {
        match self {
            Self::Linear => x,
            Self::Quadratic => 2.0 * gamma * x,
            Self::Tanh => x.tanh(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarChannel {
    /// `y = k(x, gamma) + w`
    Additive(AdditiveMap),
    /// `y = gamma x w`
    Multiplicative,
}

impl ScalarChannel {
    pub fn output(self, x: f64, w: f64, gamma: f64) -> f64 {
        match self {
            Self::Additive(map) => map.k(x, gamma) + w,
            Self::Multiplicative => gamma * x * w,
        }
    }

    /// Conditional density `p(y | x)`; zero where the map is degenerate.
    pub fn conditional_density(self, y: f64, x: f64, gamma: f64) -> f64 {
        match self {
            Self::Additive(map) => normal_pdf(y - map.k(x, gamma)),
            Self::Multiplicative => {
                let scale = (gamma * x).abs();
                if scale > 0.0 {
                    normal_pdf(y / scale) / scale
                } else {
                    0.0
                }
            }
        }
    }

    /// `df/dgamma` at the noise value that maps `x` to `y`.
    pub fn df_dgamma(self, x: f64, y: f64, gamma: f64) -> f64 {
        match self {
            Self::Additive(map) => map.dk_dgamma(x, gamma),
            // x w = y / gamma
            Self::Multiplicative => y / gamma,
        }
    }

    /// Whether `gamma` lies in the channel's parameter domain.
    pub fn admits(self, gamma: f64) -> bool {
        match self {
            Self::Additive(_) => gamma.is_finite(),
            Self::Multiplicative => gamma > 0.0 && gamma.is_finite(),
        }
    }
}
