use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::bounds::mean_stderr;
use crate::domain::{squared_distance, DirichletPrior, TallyVector};
use crate::error::{Error, Result};
use crate::estimators::{estimate, posterior_mean_tallies, Method};
use crate::mechanisms::{sample_private_data, Protocol, Reports};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Distr,
    Freq,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Distr => "distr",
            TargetKind::Freq => "freq",
        }
    }
}

/// One estimator on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub epsilon_index: usize,
    pub epsilon: f64,
    pub trial: usize,
    pub resample: usize,
    /// Seed of the trial's random stream.
    pub seed: u64,
    pub estimator: Method,
    /// `|P - P_hat|^2`; absent for real data, failed runs, or when not requested.
    pub sq_err_distr: Option<f64>,
    /// `|F - F_hat|^2`.
    pub sq_err_freq: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Why the estimator produced no usable estimate.
    pub error: Option<String>,
}

impl TrialRecord {
    /// Whether the record enters the aggregates.
    pub fn included(&self) -> bool {
        self.error.is_none() && self.converged
    }

    fn value(&self, target: TargetKind) -> Option<f64> {
        match target {
            TargetKind::Distr => self.sq_err_distr,
            TargetKind::Freq => self.sq_err_freq,
        }
    }
}

/// Mean squared error of one estimator at one epsilon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub epsilon: f64,
    pub estimator: Method,
    pub target: TargetKind,
    pub mean_mse: f64,
    pub stderr: f64,
    /// Records that entered the mean.
    pub trials: usize,
    /// Records dropped because the estimator failed or did not converge.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

impl SweepResult {
    pub fn find(&self, epsilon_index: usize, estimator: Method, target: TargetKind) -> Option<&AggregateRecord> {
        let eps = self.trials.iter().find(|t| t.epsilon_index == epsilon_index)?.epsilon;
        self.aggregates
            .iter()
            .find(|r| r.epsilon == eps && r.estimator == estimator && r.target == target)
    }
}

/// Recomputes aggregates from trial records, grouped by epsilon (grid
/// order), estimator (config order) and target (distribution first).
pub fn aggregate(records: &[TrialRecord], epsilons: &[f64], estimators: &[Method]) -> Vec<AggregateRecord> {
    let mut out = Vec::new();
    for (i, &eps) in epsilons.iter().enumerate() {
        for &m in estimators {
            for target in [TargetKind::Distr, TargetKind::Freq] {
                let group: Vec<&TrialRecord> =
                    records.iter().filter(|r| r.epsilon_index == i && r.estimator == m).collect();
                // A target nobody recorded (not requested, or real data) has no row.
                if group.iter().all(|r| r.included() && r.value(target).is_none()) {
                    continue;
                }
                let values: Vec<f64> = group.iter().filter(|r| r.included()).filter_map(|r| r.value(target)).collect();
                let (mean_mse, stderr) = if values.is_empty() { (f64::NAN, f64::NAN) } else { mean_stderr(&values) };
                out.push(AggregateRecord {
                    epsilon: eps,
                    estimator: m,
                    target,
                    mean_mse,
                    stderr,
                    trials: values.len(),
                    excluded: group.len() - values.len(),
                });
            }
        }
    }
    out
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct Truth<'a> {
    p: Option<&'a [f64]>,
    f: &'a [f64],
}

#[allow(clippy::too_many_arguments)]
fn run_estimators(
    cfg: &ExperimentConfig,
    protocol: &Protocol,
    reports: &Reports,
    prior: &DirichletPrior,
    truth: &Truth<'_>,
    (epsilon_index, trial, resample, seed): (usize, usize, usize, u64),
    distr: bool,
    freq: bool,
) -> Vec<TrialRecord> {
    cfg.estimators
        .iter()
        .map(|&m| {
            let mut rec = TrialRecord {
                epsilon_index,
                epsilon: cfg.epsilons[epsilon_index],
                trial,
                resample,
                seed,
                estimator: m,
                sq_err_distr: None,
                sq_err_freq: None,
                iterations: 0,
                converged: false,
                error: None,
            };
            match estimate_pair(protocol, reports, m, cfg, prior) {
                Ok((p_hat, f_hat, iterations, converged)) => {
                    rec.iterations = iterations;
                    rec.converged = converged;
                    if distr {
                        rec.sq_err_distr = truth.p.map(|p| squared_distance(p, &p_hat));
                    }
                    if freq {
                        rec.sq_err_freq = Some(squared_distance(truth.f, &f_hat));
                    }
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect()
}

/// Estimates of `P` and `F`. Only the posterior has a distinct estimator
/// for `F`; everything else uses its `P` estimate for both.
fn estimate_pair(
    protocol: &Protocol,
    reports: &Reports,
    m: Method,
    cfg: &ExperimentConfig,
    prior: &DirichletPrior,
) -> Result<(Vec<f64>, Vec<f64>, usize, bool)> {
    if m == Method::Posterior {
        let s = match reports {
            Reports::Symbols(s) => s.clone(),
            Reports::Bitmasks(t) => TallyVector::new(t.to_dense()?),
        };
        let post = posterior_mean_tallies(&protocol.mechanism()?, prior, &s)?;
        let p = post.mean.into_vec();
        let f = post.freq_mean.map(|d| d.into_vec()).unwrap_or_else(|| p.clone());
        return Ok((p, f, 0, true));
    }
    let r = estimate(protocol, reports, m, &cfg.mle, Some(prior))?;
    let v = r.estimate.into_vec();
    Ok((v.clone(), v, r.iterations, r.converged))
}

/// Synthetic sweep: per trial, draw `P` from the prior, then per resample
/// draw `n` inputs, perturb them and run every estimator. `F` is the
/// empirical frequency of the drawn inputs.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("synthetic sweeps need n >= 1".into()));
    }
    let a = cfg.mechanism.alphabet_size();
    let prior = cfg.prior.build(a)?;
    let protocols = cfg.epsilons.iter().map(|&e| cfg.mechanism.build(e)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.epsilons.len()).flat_map(|i| (0..cfg.trials).map(move |t| (i, t))).collect();

    let per_job: Vec<Result<Vec<TrialRecord>>> = in_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(i, t)| {
                let seed = derive_seed(cfg.seed, &[i as u64, t as u64]);
                let mut rng = rng_from_seed(seed);
                let p = prior.sample(&mut rng);
                let mut out = Vec::new();
                for r in 0..cfg.resamples {
                    let (xs, tally) = sample_private_data(&p, cfg.n, &mut rng);
                    let f = tally.frequencies()?;
                    let reports = protocols[i].perturb(&xs, &mut rng)?;
                    let truth = Truth { p: Some(p.probs()), f: &f };
                    out.extend(run_estimators(
                        cfg,
                        &protocols[i],
                        &reports,
                        &prior,
                        &truth,
                        (i, t, r, seed),
                        cfg.target.distr(),
                        cfg.target.freq(),
                    ));
                }
                Ok(out)
            })
            .collect()
    })?;
    finish(per_job, cfg)
}

/// Real-data sweep: the private data are fixed by `t`, so `F = T / n` is
/// known and only the frequency error is recorded. Each trial re-perturbs
/// the same data. The protocol alphabet is taken from `t`.
pub fn run_real(t: &TallyVector, cfg: &ExperimentConfig) -> Result<SweepResult> {
    let mut cfg = cfg.clone();
    cfg.mechanism = cfg.mechanism.with_alphabet(t.len());
    cfg.validate()?;
    let f = t.frequencies()?;
    let xs = t.to_symbols();
    let prior = cfg.prior.build(t.len())?;
    let protocols = cfg.epsilons.iter().map(|&e| cfg.mechanism.build(e)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.epsilons.len()).flat_map(|i| (0..cfg.trials).map(move |t| (i, t))).collect();

    let per_job: Vec<Result<Vec<TrialRecord>>> = in_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(i, trial)| {
                let seed = derive_seed(cfg.seed, &[i as u64, trial as u64]);
                let mut rng = rng_from_seed(seed);
                let reports = protocols[i].perturb(&xs, &mut rng)?;
                let truth = Truth { p: None, f: &f };
                Ok(run_estimators(&cfg, &protocols[i], &reports, &prior, &truth, (i, trial, 0, seed), false, true))
            })
            .collect()
    })?;
    finish(per_job, &cfg)
}

fn finish(per_job: Vec<Result<Vec<TrialRecord>>>, cfg: &ExperimentConfig) -> Result<SweepResult> {
    let mut trials = Vec::new();
    for r in per_job {
        trials.extend(r?);
    }
    let aggregates = aggregate(&trials, &cfg.epsilons, &cfg.estimators);
    Ok(SweepResult { trials, aggregates })
}
