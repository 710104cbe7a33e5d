use serde::{Deserialize, Serialize};

use crate::domain::DirichletPrior;
use crate::error::{Error, Result};
use crate::estimators::{Method, MleConfig};
use crate::mechanisms::ProtocolSpec;

/// Which error the sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Distr,
    Freq,
    #[default]
    Both,
}

impl Target {
    pub fn distr(self) -> bool {
        matches!(self, Target::Distr | Target::Both)
    }

    pub fn freq(self) -> bool {
        matches!(self, Target::Freq | Target::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedPrior {
    /// Dirichlet(1/2, .., 1/2).
    Jeffreys,
    /// Dirichlet(1, .., 1).
    Uniform,
}

/// A prior given by name or by its parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(NamedPrior),
    Gamma(Vec<f64>),
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Named(NamedPrior::Jeffreys)
    }
}

impl PriorSpec {
    pub fn build(&self, a: usize) -> Result<DirichletPrior> {
        match self {
            PriorSpec::Named(NamedPrior::Jeffreys) => Ok(DirichletPrior::jeffreys(a)),
            PriorSpec::Named(NamedPrior::Uniform) => Ok(DirichletPrior::uniform(a)),
            PriorSpec::Gamma(g) if g.len() == a => DirichletPrior::new(g.clone()),
            PriorSpec::Gamma(g) => Err(Error::DimensionMismatch { expected: a, actual: g.len() }),
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 5.0).collect()
}

fn default_trials() -> usize {
    100
}

fn default_estimators() -> Vec<Method> {
    vec![Method::Fo, Method::NormSub, Method::Mle]
}

fn default_resamples() -> usize {
    1
}

/// A sweep description, read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanism: ProtocolSpec,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Users per dataset; unused by real-data sweeps.
    #[serde(default)]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Method>,
    pub seed: u64,
    #[serde(default)]
    pub target: Target,
    /// Report datasets generated per drawn `P`.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default)]
    pub mle: MleConfig,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(mechanism: ProtocolSpec, n: usize, seed: u64) -> Self {
        Self {
            mechanism,
            epsilons: default_epsilons(),
            n,
            trials: default_trials(),
            prior: PriorSpec::default(),
            estimators: default_estimators(),
            seed,
            target: Target::default(),
            resamples: default_resamples(),
            mle: MleConfig::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.resamples == 0 {
            return Err(Error::InvalidParameter("resamples must be at least 1".into()));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter("epsilon grid must be non-empty and strictly positive".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter("no estimators selected".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        self.mle.validate()?;
        self.prior.build(self.mechanism.alphabet_size())?;
        for &e in &self.epsilons {
            self.mechanism.build(e)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_gets_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"mechanism":{"kind":"rr","a":2},"n":100,"seed":1}"#).unwrap();
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.epsilons.len(), 10);
        assert!((cfg.epsilons[0] - 0.2).abs() < 1e-15 && (cfg.epsilons[9] - 2.0).abs() < 1e-15);
        assert_eq!(cfg.prior, PriorSpec::Named(NamedPrior::Jeffreys));
        assert_eq!(cfg.target, Target::Both);
        assert_eq!(cfg, ExperimentConfig::new(ProtocolSpec::Rr { a: 2 }, 100, 1));
        cfg.validate().unwrap();
    }

    #[test]
    fn prior_forms() {
        let p: PriorSpec = serde_json::from_str(r#""uniform""#).unwrap();
        assert_eq!(p.build(3).unwrap().gamma(), &[1.0, 1.0, 1.0]);
        let p: PriorSpec = serde_json::from_str("[0.5, 2.0]").unwrap();
        assert_eq!(p.build(2).unwrap().gamma(), &[0.5, 2.0]);
        assert!(p.build(3).is_err());
    }

    #[test]
    fn invalid_configs() {
        let base = ExperimentConfig::new(ProtocolSpec::Rr { a: 2 }, 10, 0);
        let mut c = base.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.epsilons = vec![0.5, 0.0];
        assert!(c.validate().is_err());
        let mut c = base;
        c.prior = PriorSpec::Gamma(vec![1.0, -1.0]);
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"mechanism":{"kind":"rr","a":2},"seed":1,"bogus":1}"#).is_err());
    }
}
