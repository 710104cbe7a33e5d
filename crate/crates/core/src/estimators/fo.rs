use nalgebra::{DMatrix, DVector};

use crate::domain::{Mechanism, MechanismKind, SignedVector, TallyVector};
use crate::error::{Error, Result};
use crate::mechanisms::{BitmaskTally, RrSpec, UeSpec};

/// Unbiased frequency oracle for any mechanism.
///
/// Randomised response and unary encoding use their affine closed forms;
/// anything else goes through the least-squares solve
/// `argmin |Q p - S/n|_2` (well posed because `Q` has full column rank).
pub fn fo_estimate(q: &Mechanism, s: &TallyVector) -> Result<SignedVector> {
    check_len(q.output_size(), s)?;
    match q.kind() {
        MechanismKind::RandomizedResponse { epsilon } => {
            fo_estimate_rr(&RrSpec::new(q.input_size(), epsilon)?, s)
        }
        MechanismKind::UnaryEncoding { p_keep, q_flip } => {
            let spec = UeSpec::new(q.input_size(), p_keep, q_flip)?;
            fo_estimate_ue(&spec, &BitmaskTally::from_dense(spec.a, s.counts())?)
        }
        MechanismKind::General => fo_estimate_least_squares(q, s),
    }
}

/// `p_x = ((e^eps + a - 1) s_x / n - 1) / (e^eps - 1)`.
pub fn fo_estimate_rr(spec: &RrSpec, s: &TallyVector) -> Result<SignedVector> {
    check_len(spec.a, s)?;
    let n = nonempty(s.total())?;
    let e = spec.epsilon.exp();
    let a = spec.a as f64;
    SignedVector::new(
        s.counts()
            .iter()
            .map(|&c| ((e + a - 1.0) * c as f64 / n - 1.0) / (e - 1.0))
            .collect(),
    )
}

/// `p_x = (c_x / n - q) / (p - q)` with `c_x` the number of reports with bit `x` set.
pub fn fo_estimate_ue(spec: &UeSpec, t: &BitmaskTally) -> Result<SignedVector> {
    if t.a != spec.a {
        return Err(Error::DimensionMismatch { expected: spec.a, actual: t.a });
    }
    let n = nonempty(t.total)?;
    SignedVector::new(
        t.bit_counts()
            .iter()
            .map(|&c| (c as f64 / n - spec.q_flip) / (spec.p_keep - spec.q_flip))
            .collect(),
    )
}

/// Normal-equations solve `(Q^T Q) p = Q^T (S / n)`.
pub fn fo_estimate_least_squares(q: &Mechanism, s: &TallyVector) -> Result<SignedVector> {
    check_len(q.output_size(), s)?;
    let n = nonempty(s.total())?;
    let m: &DMatrix<f64> = q.matrix();
    let freq = DVector::from_iterator(s.len(), s.counts().iter().map(|&c| c as f64 / n));
    let gram = m.transpose() * m;
    let rhs = m.transpose() * freq;
    let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite)?;
    SignedVector::new(chol.solve(&rhs).iter().copied().collect())
}

fn check_len(expected: usize, s: &TallyVector) -> Result<()> {
    if s.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: s.len() });
    }
    Ok(())
}

fn nonempty(n: u64) -> Result<f64> {
    if n == 0 {
        Err(Error::EmptyTally)
    } else {
        Ok(n as f64)
    }
}
