//! Seeded experiment sweeps.
//!
//! A sweep runs every estimator at every epsilon of a grid, repeated over
//! independent trials, and aggregates squared errors. Trial `t` at grid
//! position `i` draws all of its randomness from `derive_seed(seed, [i, t])`,
//! so results do not depend on the thread count or scheduling.

mod config;
mod ingest;
mod output;
mod sweep;

pub use config::{ExperimentConfig, NamedPrior, PriorSpec, Target};
pub use ingest::{ingest_real, ingest_real_from, Binning, ColumnRef, ColumnSpec, Ingested};
pub use output::{
    write_aggregates, write_aggregates_to, write_manifest, write_sweep, write_trials, write_trials_to,
    Manifest, AGGREGATE_HEADER, TRIAL_HEADER,
};
pub use sweep::{aggregate, run_real, run_synthetic, AggregateRecord, SweepResult, TargetKind, TrialRecord};
