use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::{Mechanism, MechanismKind};
use crate::error::{Error, Result};

/// `a`-ary randomised response at privacy level `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrSpec {
    pub a: usize,
    pub epsilon: f64,
}

impl RrSpec {
    pub fn new(a: usize, epsilon: f64) -> Result<Self> {
        if a < 2 {
            return Err(Error::InvalidParameter(format!("randomised response needs a >= 2, got {a}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { a, epsilon })
    }

    /// Probability of reporting the true symbol: `e^eps / (e^eps + a - 1)`.
    pub fn keep_prob(&self) -> f64 {
        let e = self.epsilon.exp();
        e / (e + self.a as f64 - 1.0)
    }

    /// Probability of each specific other symbol: `1 / (e^eps + a - 1)`.
    pub fn flip_prob(&self) -> f64 {
        1.0 / (self.epsilon.exp() + self.a as f64 - 1.0)
    }
}

/// `Q_{y|x} = (1 + (e^eps - 1) [x = y]) / (e^eps + a - 1)`.
pub fn rr_matrix(spec: &RrSpec) -> Mechanism {
    let (keep, flip) = (spec.keep_prob(), spec.flip_prob());
    let m = DMatrix::from_fn(spec.a, spec.a, |y, x| if x == y { keep } else { flip });
    Mechanism::with_kind(
        m,
        MechanismKind::RandomizedResponse { epsilon: spec.epsilon },
        format!("rr(a={}, eps={})", spec.a, spec.epsilon),
    )
    .expect("randomised response is a valid mechanism for a >= 2, eps > 0")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn binary_matrix() {
        let eps = 0.8f64;
        let q = rr_matrix(&RrSpec::new(2, eps).unwrap());
        let e = eps.exp();
        assert!((q.prob(0, 0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((q.prob(1, 0) - 1.0 / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn ternary_ln2() {
        let q = rr_matrix(&RrSpec::new(3, 2f64.ln()).unwrap());
        for y in 0..3 {
            for x in 0..3 {
                let want = if x == y { 0.5 } else { 0.25 };
                assert!((q.prob(y, x) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn large_alphabet_epsilon() {
        let q = rr_matrix(&RrSpec::new(1024, 0.2).unwrap());
        // Independent recomputation of the max log-ratio over rows.
        let mut worst = 0.0f64;
        for y in 0..1024 {
            let row: Vec<f64> = (0..1024).map(|x| q.prob(y, x)).collect();
            let hi = row.iter().cloned().fold(0.0, f64::max);
            let lo = row.iter().cloned().fold(1.0, f64::min);
            worst = worst.max((hi / lo).ln());
        }
        assert!((worst - 0.2).abs() < 1e-10);
        assert!((q.ldp_epsilon() - 0.2).abs() < 1e-10);
    }

    #[test]
    fn random_specs_hit_their_epsilon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = rng.random_range(2..40);
            let eps = rng.random_range(0.05..5.0);
            let q = rr_matrix(&RrSpec::new(a, eps).unwrap());
            assert!(q.validate().is_empty());
            assert!((q.ldp_epsilon() - eps).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RrSpec::new(1, 1.0).is_err());
        assert!(RrSpec::new(2, 0.0).is_err());
        assert!(RrSpec::new(2, f64::NAN).is_err());
    }
}
