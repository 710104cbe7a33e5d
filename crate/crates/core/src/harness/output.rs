use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::{AggregateRecord, SweepResult, TrialRecord};
use crate::error::Result;

pub const AGGREGATE_HEADER: [&str; 7] = ["epsilon", "estimator", "target", "mean_mse", "stderr", "trials", "excluded"];

pub const TRIAL_HEADER: [&str; 11] = [
    "epsilon",
    "trial",
    "resample",
    "seed",
    "estimator",
    "sq_err_distr",
    "sq_err_freq",
    "iterations",
    "converged",
    "error",
    "epsilon_index",
];

/// Run metadata written next to the CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
    pub trial_records: usize,
    pub excluded: usize,
    /// Extra key-value context, e.g. the input file of a real-data run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, result: &SweepResult, wall_time_secs: f64) -> Self {
        Self {
            config: config.clone(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs,
            trial_records: result.trials.len(),
            excluded: result.trials.iter().filter(|t| !t.included()).count(),
            notes: Vec::new(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_aggregates_to<W: Write>(writer: W, rows: &[AggregateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.epsilon.to_string(),
            r.estimator.to_string(),
            r.target.name().to_string(),
            r.mean_mse.to_string(),
            r.stderr.to_string(),
            r.trials.to_string(),
            r.excluded.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_to<W: Write>(writer: W, rows: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.epsilon.to_string(),
            r.trial.to_string(),
            r.resample.to_string(),
            r.seed.to_string(),
            r.estimator.to_string(),
            opt(r.sq_err_distr),
            opt(r.sq_err_freq),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
            r.epsilon_index.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates(path: impl AsRef<Path>, rows: &[AggregateRecord]) -> Result<()> {
    write_aggregates_to(File::create(path)?, rows)
}

pub fn write_trials(path: impl AsRef<Path>, rows: &[TrialRecord]) -> Result<()> {
    write_trials_to(File::create(path)?, rows)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    writeln!(f)?;
    Ok(())
}

/// Writes `results.csv`, `trials.csv` and `manifest.json` into `dir`, creating it if needed.
pub fn write_sweep(dir: impl AsRef<Path>, result: &SweepResult, manifest: &Manifest) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_aggregates(dir.join("results.csv"), &result.aggregates)?;
    write_trials(dir.join("trials.csv"), &result.trials)?;
    write_manifest(dir.join("manifest.json"), manifest)
}
