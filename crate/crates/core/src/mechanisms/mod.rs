//! Concrete privacy protocols and samplers.
//!
//! Randomised response is materialised as a [`Mechanism`](crate::domain::Mechanism). Unary encoding has
//! `b = 2^a` outputs, so it is kept in factorised per-bit form and only
//! expanded to a matrix on request for small `a`.

mod protocol;
mod rr;
mod sampling;
mod ue;

pub use protocol::{Protocol, ProtocolSpec, Reports, UeVariant};
pub use rr::{rr_matrix, RrSpec};
pub use sampling::{sample_prior, sample_private_data, sample_reports, sample_reports_with};
pub use ue::{ue_matrix, BitmaskTally, UeSpec, MAX_EXPLICIT_UE_ALPHABET, MAX_UE_ALPHABET};
