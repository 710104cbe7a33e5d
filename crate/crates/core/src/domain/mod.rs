//! Shared domain types.
//!
//! Alphabets are 0-based: inputs are `0..a`, outputs `0..b`. All types are
//! immutable once constructed and validate their invariants on the way in.

mod distribution;
mod mechanism;
mod prior;
mod report;
mod tally;

pub(crate) use distribution::{project_slice, squared_distance};
pub use distribution::{simplex_project, Distribution, SignedVector, SUM_TOLERANCE};
pub use mechanism::{
    validate_matrix, Mechanism, MechanismKind, Violation, COLUMN_SUM_TOLERANCE, RANK_TOLERANCE,
};
pub use prior::DirichletPrior;
pub use report::EstimateReport;
pub use tally::{JointTally, TallyVector};
