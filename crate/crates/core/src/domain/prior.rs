use rand::Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use super::Distribution;
use crate::error::{Error, Result};

/// A Dirichlet prior on the simplex with parameter vector `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletPrior {
    gamma: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidPrior("empty parameter vector".into()));
        }
        if let Some((i, g)) = gamma.iter().enumerate().find(|(_, g)| !g.is_finite() || **g <= 0.0) {
            return Err(Error::InvalidPrior(format!("parameter {i} = {g} must be positive and finite")));
        }
        Ok(Self { gamma })
    }

    /// Jeffreys prior: every parameter 1/2.
    pub fn jeffreys(a: usize) -> Self {
        Self::symmetric(a, 0.5)
    }

    /// Uniform prior on the simplex: every parameter 1.
    pub fn uniform(a: usize) -> Self {
        Self::symmetric(a, 1.0)
    }

    pub fn symmetric(a: usize, value: f64) -> Self {
        Self::new(vec![value; a]).expect("symmetric prior needs a > 0 and value > 0")
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn alphabet_size(&self) -> usize {
        self.gamma.len()
    }

    pub fn concentration(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// `E[P] = gamma / sum(gamma)`.
    pub fn mean(&self) -> Distribution {
        let s = self.concentration();
        Distribution::new(self.gamma.iter().map(|g| g / s).collect()).expect("normalised mean")
    }

    /// `Var(P_x) = m_x (1 - m_x) / (1 + sum(gamma))`.
    pub fn variances(&self) -> Vec<f64> {
        let s = self.concentration();
        self.gamma.iter().map(|g| (g / s) * (1.0 - g / s) / (1.0 + s)).collect()
    }

    /// `E[P_i P_j]` for `i != j`: `gamma_i gamma_j / (s^2 (s + 1))`.
    pub fn cross_moment(&self, i: usize, j: usize) -> f64 {
        assert_ne!(i, j, "cross moment needs distinct coordinates");
        let s = self.concentration();
        self.gamma[i] * self.gamma[j] / (s * s * (s + 1.0))
    }

    /// Draws `P` by normalising independent `Gamma(gamma_x, 1)` variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Distribution {
        loop {
            let draws: Vec<f64> = self
                .gamma
                .iter()
                .map(|&g| Gamma::new(g, 1.0).expect("positive shape").sample(rng))
                .collect();
            let s: f64 = draws.iter().sum();
            // All-underflow is possible only for tiny shapes; redraw.
            if s > 0.0 && s.is_finite() {
                let probs: Vec<f64> = draws.iter().map(|d| d / s).collect();
                if let Ok(d) = Distribution::new(probs) {
                    return d;
                }
            }
        }
    }
}

impl TryFrom<Vec<f64>> for DirichletPrior {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DirichletPrior> for Vec<f64> {
    fn from(p: DirichletPrior) -> Self {
        p.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(DirichletPrior::new(vec![-0.5, -0.5]).is_err());
        assert!(DirichletPrior::new(vec![0.0, 1.0]).is_err());
        assert!(DirichletPrior::new(vec![]).is_err());
    }

    #[test]
    fn moments() {
        let j = DirichletPrior::jeffreys(2);
        assert!((j.cross_moment(0, 1) - 0.125).abs() < 1e-15);
        assert_eq!(j.mean().probs(), &[0.5, 0.5]);
        // Var(P_1) = (1/4) / 2
        assert!((j.variances()[0] - 0.125).abs() < 1e-15);
        let p = DirichletPrior::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!((p.mean().probs()[2] - 0.5).abs() < 1e-15);
    }
}
