use serde::{Deserialize, Serialize};

use super::{simplex_project, Distribution, SignedVector};

/// An estimate with its simplex projection and solver provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: SignedVector,
    pub projected: Distribution,
    pub estimator_name: String,
    /// Negative log-likelihood of the output tallies at `projected`, when defined.
    pub objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EstimateReport {
    /// A report for a closed-form estimator; the projection is computed here.
    pub fn closed_form(name: &str, estimate: SignedVector) -> Self {
        let projected = simplex_project(&estimate);
        Self {
            estimate,
            projected,
            estimator_name: name.to_string(),
            objective: None,
            iterations: 0,
            converged: true,
        }
    }
}
