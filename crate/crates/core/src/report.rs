use serde::{Deserialize, Serialize};

/// Decomposition of the mutual-information derivative into its estimation,
/// interference and feedback components.
///
/// All quantities are totals over `channel_uses` uses of the channel, in
/// nats (or nats per unit of the gain parameter for derivatives). Use
/// [`DecompositionReport::per_use`] to normalize.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// Value of the swept gain parameter.
    pub gamma: f64,
    pub channel_uses: usize,
    /// Sum of the users' MMSEs, before any gain weighting.
    pub mmse_term: f64,
    /// Cross-correlation of the users' estimation errors.
    pub interference_term: f64,
    /// Contribution of inputs that depend on the gain through feedback.
    pub feedback_term: f64,
    /// Weighted sum of the three terms, as prescribed by the channel model.
    pub derivative_reconstructed: f64,
    /// Derivative of the mutual information from forward-mode propagation.
    pub derivative_dual: f64,
    /// Central finite difference of the mutual information.
    pub derivative_fd: f64,
    pub mutual_information: f64,
}

impl DecompositionReport {
    /// `derivative_fd - derivative_reconstructed`.
    pub fn residual(&self) -> f64 {
        self.derivative_fd - self.derivative_reconstructed
    }

    pub fn per_use(&self) -> Self {
        let n = self.channel_uses.max(1) as f64;
        Self {
            gamma: self.gamma,
            channel_uses: self.channel_uses,
            mmse_term: self.mmse_term / n,
            interference_term: self.interference_term / n,
            feedback_term: self.feedback_term / n,
            derivative_reconstructed: self.derivative_reconstructed / n,
            derivative_dual: self.derivative_dual / n,
            derivative_fd: self.derivative_fd / n,
            mutual_information: self.mutual_information / n,
        }
    }
}
