use thiserror::Error;

/// Errors produced by the engine, the channel models and the grid laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain violation in {op}: argument {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("basis length mismatch: {left} vs {right}")]
    BasisMismatch { left: usize, right: usize },

    #[error("degenerate observation: variance {0} is not positive")]
    DegenerateObservation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_step: f64,
    },

    #[error("output covariance is not diagonal: |Cov(Y{i}, Y{j})| = {value:e}")]
    NonDiagonalOutput { i: usize, j: usize, value: f64 },

    #[error("prior integrates to {mass} on the grid, expected 1")]
    UnnormalizedPrior { mass: f64 },

    #[error("grid loses {leaked:e} of the probability mass")]
    MassLeak { leaked: f64 },

    #[error("invalid density {value} at grid cell ({ix}, {iy})")]
    InvalidDensity { ix: usize, iy: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
