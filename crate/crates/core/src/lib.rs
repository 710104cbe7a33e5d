//! Frequency estimation under local differential privacy.
//!
//! Users hold private symbols from an alphabet `A = {0, .., a-1}` and report
//! them through a randomising channel `Q` (a column-stochastic `b x a`
//! matrix). The aggregator sees only output tallies and wants either the
//! underlying distribution `P` or the empirical input frequencies `F`.
//!
//! The crate is organised around that pipeline:
//!
//! - [`domain`]: simplex vectors, mechanisms, tallies, Dirichlet priors, reports.
//! - [`mechanisms`]: randomised response and unary encoding, plus seeded samplers.
//! - [`estimators`]: frequency oracles, Norm-Sub, the likelihood maximiser
//!   (generic projected gradient and the closed form for randomised response),
//!   and the exact Bayesian posterior mean under a Dirichlet prior.
//! - [`bounds`]: the asymptotic entropy constants and the MSE lower bounds
//!   that follow from them, and exact MSEs for binary randomised response.
//! - [`harness`]: seeded, parallel experiment sweeps and real-data ingestion.
//! - [`io`]: CSV readers/writers for tallies, distributions and matrices.
//!
//! ```
//! use ldpest::mechanisms::{rr_matrix, RrSpec};
//! use ldpest::estimators::rr_mle_exact;
//! use ldpest::domain::TallyVector;
//!
//! let spec = RrSpec::new(4, 1.0).unwrap();
//! let q = rr_matrix(&spec);
//! assert!((q.ldp_epsilon() - 1.0).abs() < 1e-12);
//!
//! let tallies = TallyVector::new(vec![70, 20, 9, 1]);
//! let p = rr_mle_exact(&spec, &tallies).unwrap();
//! assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! assert_eq!(p.probs()[3], 0.0);
//! ```

#![forbid(unsafe_code)]

pub mod bounds;
pub mod domain;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod mechanisms;
pub mod rng;

pub use error::{Error, Result};

// The guide under `book/` is compiled and run as doc-tests so its snippets
// cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domain.md")]
    mod domain {}
    #[doc = include_str!("../../../book/src/mechanisms.md")]
    mod mechanisms {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/posterior.md")]
    mod posterior {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
