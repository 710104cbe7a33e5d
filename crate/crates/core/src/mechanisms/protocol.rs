use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::sample_reports_with;
use super::{rr_matrix, ue_matrix, BitmaskTally, RrSpec, UeSpec};
use crate::domain::{Mechanism, TallyVector};
use crate::error::{Error, Result};

/// Which unary-encoding parametrisation to use for a given epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeVariant {
    #[default]
    Symmetric,
    Optimized,
}

/// A protocol family and alphabet size, without its privacy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProtocolSpec {
    Rr { a: usize },
    Ue {
        a: usize,
        #[serde(default)]
        variant: UeVariant,
    },
}

impl ProtocolSpec {
    pub fn alphabet_size(&self) -> usize {
        match *self {
            ProtocolSpec::Rr { a } | ProtocolSpec::Ue { a, .. } => a,
        }
    }

    pub fn with_alphabet(self, a: usize) -> Self {
        match self {
            ProtocolSpec::Rr { .. } => ProtocolSpec::Rr { a },
            ProtocolSpec::Ue { variant, .. } => ProtocolSpec::Ue { a, variant },
        }
    }

    /// Instantiates the protocol at privacy level `epsilon`.
    pub fn build(&self, epsilon: f64) -> Result<Protocol> {
        match *self {
            ProtocolSpec::Rr { a } => Ok(Protocol::rr(RrSpec::new(a, epsilon)?)),
            ProtocolSpec::Ue { a, variant } => Ok(Protocol::Ue(match variant {
                UeVariant::Symmetric => UeSpec::symmetric(a, epsilon)?,
                UeVariant::Optimized => UeSpec::optimized(a, epsilon)?,
            })),
        }
    }
}

/// A ready-to-sample protocol.
#[derive(Debug, Clone)]
pub enum Protocol {
    Rr { spec: RrSpec, matrix: Mechanism },
    Ue(UeSpec),
    Explicit(Mechanism),
}

/// Perturbed reports as the aggregator sees them.
#[derive(Debug, Clone, PartialEq)]
pub enum Reports {
    Symbols(TallyVector),
    Bitmasks(BitmaskTally),
}

impl Reports {
    pub fn total(&self) -> u64 {
        match self {
            Reports::Symbols(t) => t.total(),
            Reports::Bitmasks(t) => t.total,
        }
    }
}

impl Protocol {
    pub fn rr(spec: RrSpec) -> Self {
        Protocol::Rr { matrix: rr_matrix(&spec), spec }
    }

    pub fn input_size(&self) -> usize {
        match self {
            Protocol::Rr { spec, .. } => spec.a,
            Protocol::Ue(s) => s.a,
            Protocol::Explicit(m) => m.input_size(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Protocol::Rr { spec, .. } => spec.epsilon,
            Protocol::Ue(s) => s.epsilon(),
            Protocol::Explicit(m) => m.ldp_epsilon(),
        }
    }

    /// The explicit matrix, when one exists or can be materialised.
    pub fn mechanism(&self) -> Result<Mechanism> {
        match self {
            Protocol::Rr { matrix, .. } => Ok(matrix.clone()),
            Protocol::Ue(s) => ue_matrix(s),
            Protocol::Explicit(m) => Ok(m.clone()),
        }
    }

    /// Perturbs each input independently.
    pub fn perturb<R: Rng + ?Sized>(&self, inputs: &[usize], rng: &mut R) -> Result<Reports> {
        let a = self.input_size();
        if let Some(&x) = inputs.iter().find(|&&x| x >= a) {
            return Err(Error::InvalidParameter(format!("input {x} outside alphabet of size {a}")));
        }
        match self {
            Protocol::Rr { spec, .. } => {
                // Keep w.p. e^eps/(e^eps+a-1), else a uniform other symbol.
                let keep = spec.keep_prob();
                let mut counts = vec![0u64; a];
                for &x in inputs {
                    let y = if rng.random::<f64>() < keep {
                        x
                    } else {
                        let r = rng.random_range(0..a - 1);
                        if r >= x { r + 1 } else { r }
                    };
                    counts[y] += 1;
                }
                Ok(Reports::Symbols(TallyVector::new(counts)))
            }
            Protocol::Ue(s) => {
                let mut t = BitmaskTally::new(s.a);
                for &x in inputs {
                    t.add(s.sample_one(x, rng), 1);
                }
                Ok(Reports::Bitmasks(t))
            }
            Protocol::Explicit(m) => Ok(Reports::Symbols(sample_reports_with(m, inputs, rng)?.1)),
        }
    }
}
