use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `sum(p) == 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex over `{0, .., a-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some((i, v)) = probs.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {i} = {v} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(a: usize) -> Self {
        assert!(a > 0, "alphabet must be non-empty");
        Self { probs: vec![1.0 / a as f64; a] }
    }

    /// The point mass on `x`.
    pub fn point_mass(a: usize, x: usize) -> Self {
        assert!(x < a, "symbol out of range");
        let mut probs = vec![0.0; a];
        probs[x] = 1.0;
        Self { probs }
    }

    /// Normalised counts `t / n`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyTally);
        }
        Self::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Squared Euclidean distance to an arbitrary vector of the same length.
    pub fn squared_error(&self, other: &[f64]) -> f64 {
        squared_distance(&self.probs, other)
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// An estimate in `R^a`; unbiased estimators may leave the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SignedVector {
    values: Vec<f64>,
}

impl SignedVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVector(format!("entry {i} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for SignedVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SignedVector> for Vec<f64> {
    fn from(v: SignedVector) -> Self {
        v.values
    }
}

impl From<Distribution> for SignedVector {
    fn from(d: Distribution) -> Self {
        Self { values: d.probs }
    }
}

pub(crate) fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "length mismatch");
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Euclidean projection onto the probability simplex.
///
/// Sort-based: with `u` sorted descending, the threshold is
/// `theta = (sum_{i<=rho} u_i - 1) / rho` for the largest `rho` such that
/// `u_rho > theta`, and the projection is `max(v - theta, 0)`.
pub fn simplex_project(v: &SignedVector) -> Distribution {
    Distribution { probs: project_slice(v.values()) }
}

pub(crate) fn project_slice(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui > t {
            theta = t;
        }
    }
    let mut p: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // Recentre on the support so the sum is 1 to rounding.
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let s: f64 = support.iter().map(|&i| p[i]).sum();
    let shift = (s - 1.0) / support.len() as f64;
    for &i in &support {
        p[i] = (p[i] - shift).max(0.0);
    }
    p
}
