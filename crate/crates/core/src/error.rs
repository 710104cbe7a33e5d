use thiserror::Error;

use crate::domain::Violation;

/// Errors raised by constructors, estimators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid mechanism: {}", format_violations(.0))]
    InvalidMechanism(Vec<Violation>),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tally has no reports")]
    EmptyTally,

    #[error("instance exceeds the enumeration budget ({terms} terms > {budget})")]
    BudgetExceeded { terms: f64, budget: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = core::result::Result<T, Error>;
