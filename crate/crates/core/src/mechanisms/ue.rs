use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Mechanism, MechanismKind};
use crate::error::{Error, Result};

/// Largest alphabet whose `2^a x a` matrix may be materialised.
pub const MAX_EXPLICIT_UE_ALPHABET: usize = 20;

/// Largest alphabet representable with `u64` bitmask outputs.
pub const MAX_UE_ALPHABET: usize = 63;

/// Unary encoding: input `x` is one-hot encoded, then bit `x` is reported as
/// 1 with probability `p_keep` and every other bit with probability `q_flip`.
///
/// Outputs are bitmasks; bit `j` of the output index is coordinate `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub a: usize,
    pub p_keep: f64,
    pub q_flip: f64,
}

impl UeSpec {
    pub fn new(a: usize, p_keep: f64, q_flip: f64) -> Result<Self> {
        if !(2..=MAX_UE_ALPHABET).contains(&a) {
            return Err(Error::InvalidParameter(format!(
                "unary encoding needs 2 <= a <= {MAX_UE_ALPHABET}, got {a}"
            )));
        }
        if !(0.0 < q_flip && q_flip < p_keep && p_keep < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "unary encoding needs 0 < q_flip < p_keep < 1, got p={p_keep}, q={q_flip}"
            )));
        }
        Ok(Self { a, p_keep, q_flip })
    }

    /// Symmetric (RAPPOR-style) parameters: `p = e^{eps/2} / (e^{eps/2} + 1)`, `q = 1 - p`.
    pub fn symmetric(a: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let h = (epsilon / 2.0).exp();
        Self::new(a, h / (h + 1.0), 1.0 / (h + 1.0))
    }

    /// Optimised unary encoding: `p = 1/2`, `q = 1 / (e^eps + 1)`.
    pub fn optimized(a: usize, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Self::new(a, 0.5, 1.0 / (epsilon.exp() + 1.0))
    }

    /// `ln(p (1 - q) / (q (1 - p)))`.
    pub fn epsilon(&self) -> f64 {
        (self.p_keep.ln() + (1.0 - self.q_flip).ln()) - (self.q_flip.ln() + (1.0 - self.p_keep).ln())
    }

    pub fn output_size(&self) -> u128 {
        1u128 << self.a
    }

    /// `Q_{y|x}` evaluated as a product of per-bit Bernoulli factors.
    pub fn prob(&self, y: u64, x: usize) -> f64 {
        self.log_prob(y, x).exp()
    }

    pub fn log_prob(&self, y: u64, x: usize) -> f64 {
        let ones = y.count_ones() as usize;
        let own = (y >> x) & 1 == 1;
        let (own_term, other_ones) = if own {
            (self.p_keep.ln(), ones - 1)
        } else {
            ((1.0 - self.p_keep).ln(), ones)
        };
        let other_zeros = self.a - 1 - other_ones;
        own_term + other_ones as f64 * self.q_flip.ln() + other_zeros as f64 * (1.0 - self.q_flip).ln()
    }

    /// Row `y` of the channel, i.e. `(Q_{y|0}, .., Q_{y|a-1})`.
    pub fn row(&self, y: u64) -> Vec<f64> {
        (0..self.a).map(|x| self.prob(y, x)).collect()
    }

    /// Perturbs one input.
    pub fn sample_one<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> u64 {
        let mut y = 0u64;
        for j in 0..self.a {
            let p = if j == x { self.p_keep } else { self.q_flip };
            if rng.random::<f64>() < p {
                y |= 1 << j;
            }
        }
        y
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// The explicit `2^a x a` matrix; refused above [`MAX_EXPLICIT_UE_ALPHABET`].
pub fn ue_matrix(spec: &UeSpec) -> Result<Mechanism> {
    if spec.a > MAX_EXPLICIT_UE_ALPHABET {
        return Err(Error::InvalidParameter(format!(
            "explicit unary-encoding matrix limited to a <= {MAX_EXPLICIT_UE_ALPHABET}, got {}",
            spec.a
        )));
    }
    let b = 1usize << spec.a;
    let m = DMatrix::from_fn(b, spec.a, |y, x| spec.prob(y as u64, x));
    Mechanism::with_kind(
        m,
        MechanismKind::UnaryEncoding { p_keep: spec.p_keep, q_flip: spec.q_flip },
        format!("ue(a={}, p={}, q={})", spec.a, spec.p_keep, spec.q_flip),
    )
}

/// Sparse tally of unary-encoding reports keyed by bitmask.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BitmaskTally {
    pub a: usize,
    pub counts: BTreeMap<u64, u64>,
    pub total: u64,
}

impl BitmaskTally {
    pub fn new(a: usize) -> Self {
        Self { a, counts: BTreeMap::new(), total: 0 }
    }

    pub fn from_reports(a: usize, reports: &[u64]) -> Self {
        let mut t = Self::new(a);
        for &r in reports {
            t.add(r, 1);
        }
        t
    }

    pub fn add(&mut self, mask: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(mask).or_insert(0) += count;
            self.total += count;
        }
    }

    /// Number of reports with bit `x` set, for each `x`.
    pub fn bit_counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.a];
        for (&mask, &n) in &self.counts {
            for (j, cj) in c.iter_mut().enumerate() {
                if (mask >> j) & 1 == 1 {
                    *cj += n;
                }
            }
        }
        c
    }

    /// Dense vector indexed by bitmask (length `2^a`).
    pub fn to_dense(&self) -> Result<Vec<u64>> {
        if self.a > MAX_EXPLICIT_UE_ALPHABET {
            return Err(Error::InvalidParameter("dense bitmask tally too large".into()));
        }
        let mut v = vec![0u64; 1 << self.a];
        for (&m, &c) in &self.counts {
            v[m as usize] = c;
        }
        Ok(v)
    }

    pub fn from_dense(a: usize, counts: &[u64]) -> Result<Self> {
        if counts.len() != 1usize << a {
            return Err(Error::DimensionMismatch { expected: 1 << a, actual: counts.len() });
        }
        let mut t = Self::new(a);
        for (m, &c) in counts.iter().enumerate() {
            t.add(m as u64, c);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn two_bit_column() {
        let spec = UeSpec::new(2, 0.75, 0.25).unwrap();
        let q = ue_matrix(&spec).unwrap();
        // Hand product of per-bit factors, indexed by bitmask (bit 0 = LSB).
        // x = 0: bit 0 kept w.p. 3/4, bit 1 flipped on w.p. 1/4.
        let want = [0.25 * 0.75, 0.75 * 0.75, 0.25 * 0.25, 0.75 * 0.25];
        for (y, w) in want.iter().enumerate() {
            assert!((q.prob(y, 0) - w).abs() < 1e-15, "y={y}");
        }
        assert!((want[0] - 3.0 / 16.0).abs() < 1e-15);
        assert!((want[1] - 9.0 / 16.0).abs() < 1e-15);
        assert!((want[2] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn enumeration_matches_bit_products() {
        let spec = UeSpec::new(4, 0.7, 0.2).unwrap();
        for x in 0..4 {
            let mut total = 0.0;
            for y in 0u64..16 {
                let mut p = 1.0;
                for j in 0..4 {
                    let on = (y >> j) & 1 == 1;
                    let pj = if j == x { 0.7 } else { 0.2 };
                    p *= if on { pj } else { 1.0 - pj };
                }
                assert!((spec.prob(y, x) - p).abs() < 1e-15);
                total += p;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_and_optimized_epsilon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = rng.random_range(2..9);
            let eps = rng.random_range(0.1..4.0);
            for spec in [UeSpec::symmetric(a, eps).unwrap(), UeSpec::optimized(a, eps).unwrap()] {
                assert!((spec.epsilon() - eps).abs() < 1e-10);
                let q = ue_matrix(&spec).unwrap();
                assert!(q.validate().is_empty());
                assert!((q.ldp_epsilon() - eps).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn expansion_refused_for_large_alphabets() {
        let spec = UeSpec::symmetric(21, 1.0).unwrap();
        assert!(ue_matrix(&spec).is_err());
        assert!(UeSpec::symmetric(64, 1.0).is_err());
        assert!(UeSpec::new(3, 0.2, 0.5).is_err());
    }

    #[test]
    fn bit_counts() {
        let t = BitmaskTally::from_reports(3, &[0b001, 0b011, 0b111, 0b000]);
        assert_eq!(t.bit_counts(), vec![3, 2, 1]);
        assert_eq!(t.total, 4);
        let d = t.to_dense().unwrap();
        assert_eq!(BitmaskTally::from_dense(3, &d).unwrap(), t);
    }
}
