use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on each column summing to one.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-12;

/// Smallest admissible singular value of the column-normalised matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// One failed mechanism invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    EmptyMatrix,
    NonFinite { output: usize, input: usize },
    StrictPositivity { output: usize, input: usize, value: f64 },
    ColumnSum { input: usize, sum: f64 },
    Rank { smallest_singular_value: f64, rank_required: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyMatrix => write!(f, "dimensions: matrix is empty"),
            Violation::NonFinite { output, input } => {
                write!(f, "finiteness: entry ({output}, {input}) is not finite")
            }
            Violation::StrictPositivity { output, input, value } => {
                write!(f, "strict positivity: entry ({output}, {input}) = {value}")
            }
            Violation::ColumnSum { input, sum } => {
                write!(f, "column sum: column {input} sums to {sum}")
            }
            Violation::Rank { smallest_singular_value, rank_required } => write!(
                f,
                "rank: smallest singular value {smallest_singular_value:e} (rank {rank_required} required)"
            ),
        }
    }
}

/// Which closed-form family a mechanism was built from, if any.
///
/// Estimators use this to pick the specialised frequency oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MechanismKind {
    General,
    RandomizedResponse { epsilon: f64 },
    UnaryEncoding { p_keep: f64, q_flip: f64 },
}

/// A privacy protocol as a column-stochastic `b x a` matrix:
/// column `x` is the output distribution of input `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    matrix: DMatrix<f64>,
    kind: MechanismKind,
    name: String,
}

/// Checks positivity, column sums and full column rank; returns every
/// violation found (empty when the matrix is a valid mechanism).
pub fn validate_matrix(q: &DMatrix<f64>) -> Vec<Violation> {
    let mut out = Vec::new();
    let (b, a) = q.shape();
    if a == 0 || b == 0 {
        out.push(Violation::EmptyMatrix);
        return out;
    }
    let mut finite = true;
    for x in 0..a {
        for y in 0..b {
            let v = q[(y, x)];
            if !v.is_finite() {
                finite = false;
                out.push(Violation::NonFinite { output: y, input: x });
            } else if v <= 0.0 {
                out.push(Violation::StrictPositivity { output: y, input: x, value: v });
            }
        }
        let sum: f64 = q.column(x).iter().sum();
        if finite && (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
            out.push(Violation::ColumnSum { input: x, sum });
        }
    }
    if finite {
        let s = smallest_singular_value(q);
        if a > b || s <= RANK_TOLERANCE {
            out.push(Violation::Rank { smallest_singular_value: s, rank_required: a });
        }
    }
    out
}

/// Smallest singular value after scaling each column to unit Euclidean norm.
/// Goes through a thin QR so tall matrices (unary encoding) stay cheap.
fn smallest_singular_value(q: &DMatrix<f64>) -> f64 {
    let (b, a) = q.shape();
    if a > b {
        return 0.0;
    }
    let mut m = q.clone();
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let r = m.qr().r();
    r.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

impl Mechanism {
    /// Wraps a matrix, rejecting it with the full violation list if invalid.
    pub fn new(matrix: DMatrix<f64>, name: impl Into<String>) -> Result<Self> {
        Self::with_kind(matrix, MechanismKind::General, name)
    }

    pub fn with_kind(matrix: DMatrix<f64>, kind: MechanismKind, name: impl Into<String>) -> Result<Self> {
        let violations = validate_matrix(&matrix);
        if !violations.is_empty() {
            return Err(Error::InvalidMechanism(violations));
        }
        Ok(Self { matrix, kind, name: name.into() })
    }

    /// Builds from row-major rows (`b` rows of length `a`).
    pub fn from_rows(rows: &[Vec<f64>], name: impl Into<String>) -> Result<Self> {
        let b = rows.len();
        let a = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != a) {
            return Err(Error::DimensionMismatch { expected: a, actual: bad.len() });
        }
        let m = DMatrix::from_fn(b, a, |y, x| rows[y][x]);
        Self::new(m, name)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_size(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn output_size(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Q_{y|x}`.
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.matrix[(y, x)]
    }

    /// Re-runs validation; always empty for a constructed mechanism.
    pub fn validate(&self) -> Vec<Violation> {
        validate_matrix(&self.matrix)
    }

    /// The smallest `eps` for which the mechanism is `eps`-LDP:
    /// `max_y ln(max_x Q_{y|x} / min_x Q_{y|x})`.
    pub fn ldp_epsilon(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|row| {
                let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
                hi.ln() - lo.ln()
            })
            .fold(0.0, f64::max)
    }

    /// The output distribution `Q p`.
    pub fn output_distribution(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.input_size(), "input length mismatch");
        let v = &self.matrix * nalgebra::DVector::from_column_slice(p);
        v.iter().copied().collect()
    }

    /// The same channel with outputs relabelled: row `y` of the result is
    /// row `perm[y]` of `self`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Self> {
        let b = self.output_size();
        if perm.len() != b {
            return Err(Error::DimensionMismatch { expected: b, actual: perm.len() });
        }
        let m = DMatrix::from_fn(b, self.input_size(), |y, x| self.matrix[(perm[y], x)]);
        Self::with_kind(m, MechanismKind::General, format!("{}-permuted", self.name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rr2(eps: f64) -> DMatrix<f64> {
        let e = eps.exp();
        DMatrix::from_row_slice(2, 2, &[e / (e + 1.0), 1.0 / (e + 1.0), 1.0 / (e + 1.0), e / (e + 1.0)])
    }

    #[test]
    fn rr_ln3_is_valid() {
        let m = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert!(validate_matrix(&m).is_empty());
        let q = Mechanism::new(m, "rr").unwrap();
        assert!((q.ldp_epsilon() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_entry_is_flagged() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.0, 0.75]);
        let v = validate_matrix(&m);
        assert!(v.contains(&Violation::StrictPositivity { output: 1, input: 0, value: 0.0 }));
        assert!(v.iter().all(|x| !matches!(x, Violation::Rank { .. })));
        assert!(v[0].to_string().starts_with("strict positivity"));
    }

    #[test]
    fn identical_columns_fail_rank() {
        let m = DMatrix::from_element(2, 2, 0.5);
        let v = validate_matrix(&m);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Rank { .. }));
        assert!(Mechanism::new(m, "flat").is_err());
    }

    #[test]
    fn bad_column_sum_and_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.6, 0.25, 0.6, 0.75]);
        assert!(validate_matrix(&m).contains(&Violation::ColumnSum { input: 0, sum: 1.2 }));
        let wide = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(validate_matrix(&wide).iter().any(|v| matches!(v, Violation::Rank { .. })));
    }

    #[test]
    fn epsilon_examples() {
        let q = Mechanism::new(rr2(1.0), "rr").unwrap();
        assert!((q.ldp_epsilon() - 1.0).abs() < 1e-12);
        // a = 1, uniform over b = 3 outputs.
        let u = Mechanism::new(DMatrix::from_element(3, 1, 1.0 / 3.0), "uniform").unwrap();
        assert_eq!(u.ldp_epsilon(), 0.0);
    }

    #[test]
    fn permuting_outputs_keeps_epsilon() {
        let q = Mechanism::new(rr2(0.7), "rr").unwrap();
        let p = q.permute_outputs(&[1, 0]).unwrap();
        assert!((p.ldp_epsilon() - 0.7).abs() < 1e-12);
        assert_eq!(p.prob(0, 0), q.prob(1, 0));
    }
}
