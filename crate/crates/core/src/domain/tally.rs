use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer counts of symbols; `total()` is their sum.
///
/// Indexed by the input alphabet this is `T`, by the output alphabet `S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<u64>", into = "Vec<u64>")]
pub struct TallyVector {
    counts: Vec<u64>,
    total: u64,
}

impl TallyVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn zeros(len: usize) -> Self {
        Self { counts: vec![0; len], total: 0 }
    }

    /// Tallies `symbols`, each of which must be `< len`.
    pub fn from_symbols(symbols: &[usize], len: usize) -> Result<Self> {
        let mut counts = vec![0u64; len];
        for &s in symbols {
            if s >= len {
                return Err(Error::InvalidParameter(format!("symbol {s} outside alphabet of size {len}")));
            }
            counts[s] += 1;
        }
        Ok(Self::new(counts))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `counts / total`, or an error when nothing was counted.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::EmptyTally);
        }
        let n = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Expands back to a sorted symbol list `0,0,..,1,1,..`.
    pub fn to_symbols(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }
}

impl From<Vec<u64>> for TallyVector {
    fn from(v: Vec<u64>) -> Self {
        Self::new(v)
    }
}

impl From<TallyVector> for Vec<u64> {
    fn from(t: TallyVector) -> Self {
        t.counts
    }
}

/// Joint tallies `S_{y|x} = #{i : X_i = x, Y_i = y}` as a `b x a` table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTally {
    outputs: usize,
    inputs: usize,
    counts: Vec<u64>,
}

impl JointTally {
    pub fn new(outputs: usize, inputs: usize) -> Self {
        Self { outputs, inputs, counts: vec![0; outputs * inputs] }
    }

    /// Tallies paired `(x_i, y_i)` observations.
    pub fn from_pairs(xs: &[usize], ys: &[usize], inputs: usize, outputs: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), actual: ys.len() });
        }
        let mut j = Self::new(outputs, inputs);
        for (&x, &y) in xs.iter().zip(ys) {
            if x >= inputs || y >= outputs {
                return Err(Error::InvalidParameter(format!("pair ({x}, {y}) out of range")));
            }
            j.counts[y * inputs + x] += 1;
        }
        Ok(j)
    }

    pub fn get(&self, y: usize, x: usize) -> u64 {
        self.counts[y * self.inputs + x]
    }

    /// Row sums: the output tally `S`.
    pub fn output_tally(&self) -> TallyVector {
        TallyVector::new(
            (0..self.outputs)
                .map(|y| (0..self.inputs).map(|x| self.get(y, x)).sum())
                .collect(),
        )
    }

    /// Column sums: the input tally `T`.
    pub fn input_tally(&self) -> TallyVector {
        TallyVector::new(
            (0..self.inputs)
                .map(|x| (0..self.outputs).map(|y| self.get(y, x)).sum())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_tally() {
        let t = TallyVector::from_symbols(&[0, 2, 2, 1, 2], 3).unwrap();
        assert_eq!(t.counts(), &[1, 1, 3]);
        assert_eq!(t.total(), 5);
        assert_eq!(t.to_symbols(), vec![0, 1, 2, 2, 2]);
        assert!(TallyVector::from_symbols(&[3], 3).is_err());
        assert!(TallyVector::zeros(4).frequencies().is_err());
    }

    proptest! {
        #[test]
        fn joint_margins_match(pairs in prop::collection::vec((0usize..4, 0usize..5), 0..200)) {
            let xs: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let j = JointTally::from_pairs(&xs, &ys, 4, 5).unwrap();
            prop_assert_eq!(j.output_tally(), TallyVector::from_symbols(&ys, 5).unwrap());
            prop_assert_eq!(j.input_tally(), TallyVector::from_symbols(&xs, 4).unwrap());
        }
    }
}
