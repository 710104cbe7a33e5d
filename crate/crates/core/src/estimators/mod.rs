//! Estimators of `P` (and `F`) from perturbed tallies.
//!
//! - [`fo_estimate`]: unbiased frequency oracles, possibly off the simplex.
//! - [`norm_sub`]: shift-and-clamp post-processing of an oracle estimate.
//! - [`mle_estimate`]: likelihood maximisation by projected gradient.
//! - [`rr_mle_exact`]: the closed-form likelihood maximiser for randomised response.
//! - [`posterior_mean_exact`]: the MSE-optimal posterior mean under a Dirichlet prior.

mod fo;
mod mle;
mod normsub;
mod posterior;
mod rr_exact;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fo::{fo_estimate, fo_estimate_least_squares, fo_estimate_rr, fo_estimate_ue};
pub use mle::{mle_estimate, mle_estimate_ue, projected_gradient_norm, Likelihood, MleConfig};
pub use normsub::{norm_sub, norm_sub_with_shift};
pub use posterior::{
    compositions, exact_mse_of, posterior_mean_exact, posterior_mean_tallies, posterior_mse_exact, PosteriorResult,
    ENUMERATION_BUDGET, MSE_BUDGET,
};
pub use rr_exact::rr_mle_exact;

use crate::domain::{DirichletPrior, EstimateReport, SignedVector, TallyVector};
use crate::error::{Error, Result};
use crate::mechanisms::{Protocol, Reports};

/// Estimation method selector used by the harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Frequency oracle.
    Fo,
    /// Frequency oracle followed by Norm-Sub.
    #[serde(rename = "normsub")]
    NormSub,
    /// Likelihood maximiser: closed form for randomised response, projected gradient otherwise.
    Mle,
    /// Projected-gradient likelihood maximiser, even where a closed form exists.
    MlePgd,
    /// Closed-form randomised-response maximiser only.
    RrExact,
    /// Exact posterior mean; needs a prior and a small instance.
    Posterior,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Fo, Method::NormSub, Method::Mle, Method::MlePgd, Method::RrExact, Method::Posterior];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fo => "fo",
            Method::NormSub => "normsub",
            Method::Mle => "mle",
            Method::MlePgd => "mle-pgd",
            Method::RrExact => "rr-exact",
            Method::Posterior => "posterior",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator `{s}`")))
    }
}

/// Runs `method` on reports produced by `protocol`.
///
/// `prior` is required for [`Method::Posterior`] and ignored otherwise.
pub fn estimate(
    protocol: &Protocol,
    reports: &Reports,
    method: Method,
    cfg: &MleConfig,
    prior: Option<&DirichletPrior>,
) -> Result<EstimateReport> {
    match method {
        Method::Fo => Ok(EstimateReport::closed_form(method.name(), oracle(protocol, reports)?)),
        Method::NormSub => {
            let v = oracle(protocol, reports)?;
            let projected = norm_sub(&v);
            Ok(EstimateReport {
                estimate: projected.clone().into(),
                projected,
                estimator_name: method.name().into(),
                objective: None,
                iterations: 0,
                converged: true,
            })
        }
        Method::Mle | Method::RrExact => match (protocol, reports) {
            (Protocol::Rr { spec, matrix }, Reports::Symbols(s)) => {
                let p = rr_mle_exact(spec, s)?;
                let objective = Likelihood::from_mechanism(matrix, s)?.neg_log_likelihood(p.probs());
                Ok(EstimateReport {
                    estimate: p.clone().into(),
                    projected: p,
                    estimator_name: method.name().into(),
                    objective: Some(objective),
                    iterations: 0,
                    converged: true,
                })
            }
            _ if method == Method::RrExact => {
                Err(Error::InvalidParameter("rr-exact applies to randomised response only".into()))
            }
            _ => renamed(pgd(protocol, reports, cfg)?, method),
        },
        Method::MlePgd => pgd(protocol, reports, cfg),
        Method::Posterior => {
            let prior = prior.ok_or_else(|| Error::InvalidParameter("posterior needs a prior".into()))?;
            let q = protocol.mechanism()?;
            let s = symbol_tally(reports)?;
            let post = posterior_mean_tallies(&q, prior, &s)?;
            Ok(EstimateReport {
                estimate: post.mean.clone().into(),
                projected: post.mean,
                estimator_name: method.name().into(),
                objective: None,
                iterations: 0,
                converged: true,
            })
        }
    }
}

fn oracle(protocol: &Protocol, reports: &Reports) -> Result<SignedVector> {
    match (protocol, reports) {
        (Protocol::Rr { spec, .. }, Reports::Symbols(s)) => fo_estimate_rr(spec, s),
        (Protocol::Ue(spec), Reports::Bitmasks(t)) => fo_estimate_ue(spec, t),
        (Protocol::Explicit(q), Reports::Symbols(s)) => fo_estimate(q, s),
        _ => Err(mismatch()),
    }
}

fn pgd(protocol: &Protocol, reports: &Reports, cfg: &MleConfig) -> Result<EstimateReport> {
    match (protocol, reports) {
        (Protocol::Rr { matrix, .. }, Reports::Symbols(s)) | (Protocol::Explicit(matrix), Reports::Symbols(s)) => {
            mle_estimate(matrix, s, cfg)
        }
        (Protocol::Ue(spec), Reports::Bitmasks(t)) => mle_estimate_ue(spec, t, cfg),
        _ => Err(mismatch()),
    }
}

fn renamed(mut r: EstimateReport, method: Method) -> Result<EstimateReport> {
    r.estimator_name = method.name().into();
    Ok(r)
}

fn symbol_tally(reports: &Reports) -> Result<TallyVector> {
    match reports {
        Reports::Symbols(s) => Ok(s.clone()),
        Reports::Bitmasks(t) => Ok(TallyVector::new(t.to_dense()?)),
    }
}

fn mismatch() -> Error {
    Error::InvalidParameter("reports do not match the protocol".into())
}
