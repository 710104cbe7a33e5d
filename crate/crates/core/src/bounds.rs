//! Privacy-utility lower bounds.
//!
//! The linear-algebra constants
//!
//! ```text
//! gamma = (a-1)/2 ln(2 pi e) - 1/2 E_P ln det D_P
//! delta = gamma + 1/2 E_P ln(det G_P / prod_y (Q P)_y)
//! ```
//!
//! with `D_p = Q^T diag(Q p)^{-1} Q`, `E_x = diag(w_x) - w_x w_x^T` (where
//! `w_x` is column `x` without its last entry) and `G_p = sum_x p_x E_x`,
//! govern the `n -> infinity` behaviour of the optimal MSEs. They are
//! estimated by Monte Carlo over `P ~ prior`. The epsilon-only bounds and
//! the exact MSEs of binary randomised response are closed forms.
//!
//! Natural logarithms throughout.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DirichletPrior, Distribution, Mechanism};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Samples whose `D_P` has a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Fewest Monte-Carlo samples accepted by [`gamma_delta_mc`].
pub const MIN_SAMPLES: usize = 100;

const TWO_PI_E: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::E;

/// `D_p = Q^T diag(Q p)^{-1} Q`; `p` must be interior.
pub fn matrix_d(q: &Mechanism, p: &Distribution) -> Result<DMatrix<f64>> {
    check_alphabet(q, p)?;
    if p.probs().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("D_p needs an interior distribution".into()));
    }
    Ok(d_unchecked(q, p.probs()))
}

fn d_unchecked(q: &Mechanism, p: &[f64]) -> DMatrix<f64> {
    let m = q.matrix();
    let qp = m * DVector::from_column_slice(p);
    let mut scaled = m.clone();
    for (y, mut row) in scaled.row_iter_mut().enumerate() {
        row /= qp[y];
    }
    m.transpose() * scaled
}

/// `E_x = diag(w_x) - w_x w_x^T` on the first `b - 1` outputs.
pub fn matrix_e(q: &Mechanism, x: usize) -> Result<DMatrix<f64>> {
    if x >= q.input_size() {
        return Err(Error::InvalidParameter(format!("input {x} outside alphabet")));
    }
    let b = q.output_size();
    let w = q.matrix().view((0, x), (b - 1, 1)).into_owned();
    Ok(DMatrix::from_diagonal(&w.column(0)) - &w * w.transpose())
}

/// `G_p = sum_x p_x E_x`.
pub fn matrix_g(q: &Mechanism, p: &Distribution) -> Result<DMatrix<f64>> {
    check_alphabet(q, p)?;
    Ok(g_unchecked(q, p.probs()))
}

fn g_unchecked(q: &Mechanism, p: &[f64]) -> DMatrix<f64> {
    let b = q.output_size();
    // G_p = diag(W p) - W diag(p) W^T, with W the truncated matrix.
    let w = q.matrix().rows(0, b - 1);
    let wp = &w * DVector::from_column_slice(p);
    let mut wd = w.clone_owned();
    for (x, mut col) in wd.column_iter_mut().enumerate() {
        col *= p[x];
    }
    DMatrix::from_diagonal(&wp) - wd * w.transpose()
}

fn check_alphabet(q: &Mechanism, p: &Distribution) -> Result<()> {
    if p.alphabet_size() != q.input_size() {
        return Err(Error::DimensionMismatch { expected: q.input_size(), actual: p.alphabet_size() });
    }
    Ok(())
}

/// `ln det` of a symmetric positive definite matrix via its Cholesky factor.
pub fn log_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Monte-Carlo estimates of the two entropy constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDelta {
    pub gamma_mu: f64,
    pub gamma_stderr: f64,
    pub delta_mu: f64,
    pub delta_stderr: f64,
    /// Samples that entered the means.
    pub mc_samples: usize,
    /// Samples dropped because `D_P` was numerically singular.
    pub rejected: usize,
}

/// Estimates `gamma_mu(Q)` and `delta_mu(Q)` from `samples` draws of `P`.
///
/// Sample `i` uses the stream `derive_seed(seed, [i])`, and sums are reduced
/// pairwise in sample order, so the result is bit-identical regardless of
/// thread count.
pub fn gamma_delta_mc(q: &Mechanism, prior: &DirichletPrior, samples: usize, seed: u64) -> Result<GammaDelta> {
    let a = q.input_size();
    if prior.alphabet_size() != a {
        return Err(Error::DimensionMismatch { expected: a, actual: prior.alphabet_size() });
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let draws: Vec<Option<(f64, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = prior.sample(&mut rng_from_seed(derive_seed(seed, &[i as u64])));
            let d = d_unchecked(q, p.probs());
            if condition_number(&d) > MAX_CONDITION {
                return None;
            }
            let ln_d = log_det_spd(&d).ok()?;
            let ln_g = log_det_spd(&g_unchecked(q, p.probs())).ok()?;
            let ln_qp: f64 = q.output_distribution(p.probs()).iter().map(|v| v.ln()).sum();
            // Per-sample contributions to gamma and delta.
            Some((-0.5 * ln_d, -0.5 * ln_d + 0.5 * (ln_g - ln_qp)))
        })
        .collect();

    let kept: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
    let m = kept.len();
    if m < 2 {
        return Err(Error::InvalidParameter("too few usable Monte-Carlo samples".into()));
    }
    let base = (a as f64 - 1.0) / 2.0 * TWO_PI_E.ln();
    let (g_mean, g_se) = mean_stderr(&kept.iter().map(|v| v.0).collect::<Vec<_>>());
    let (d_mean, d_se) = mean_stderr(&kept.iter().map(|v| v.1).collect::<Vec<_>>());
    Ok(GammaDelta {
        gamma_mu: base + g_mean,
        gamma_stderr: g_se,
        delta_mu: base + d_mean,
        delta_stderr: d_se,
        mc_samples: m,
        rejected: samples - m,
    })
}

/// Sum in a fixed binary-tree order.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// Lower bound on `gamma_mu(Q)` for any epsilon-LDP `Q`: `(a-1) ln(sqrt(2 pi e) / (e^eps - 1))`.
pub fn eps_bound_gamma(a: usize, epsilon: f64) -> f64 {
    (a as f64 - 1.0) * (TWO_PI_E.sqrt().ln() - epsilon.exp_m1().ln())
}

/// Lower bound on `delta_mu(Q)`: the gamma bound minus `b eps / 2`.
pub fn eps_bound_delta(a: usize, b: usize, epsilon: f64) -> f64 {
    eps_bound_gamma(a, epsilon) - b as f64 * epsilon / 2.0
}

/// Epsilon-only MSE lower bounds at `n` users: `(a / (n (e^eps-1)^2), a e^{-b eps / (2(a-1))} / (n (e^eps-1)^2))`.
pub fn eps_lower_bounds(a: usize, b: usize, epsilon: f64, n: u64) -> Result<(f64, f64)> {
    if a < 2 || b < 2 || !(epsilon > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("need a >= 2, b >= 2, epsilon > 0, n >= 1".into()));
    }
    let denom = n as f64 * epsilon.exp_m1().powi(2);
    let a = a as f64;
    Ok((a / denom, a * (-(b as f64) * epsilon / (2.0 * (a - 1.0))).exp() / denom))
}

/// `a / (2 pi e) * e^{2 h / (a - 1)}`: the distribution-error bound from a
/// conditional differential entropy `h`, or, with `h = gamma_mu`, the limit of `n * MSE`.
pub fn entropy_bound_distr(h: f64, a: usize) -> f64 {
    let a = a as f64;
    a / TWO_PI_E * (2.0 * h / (a - 1.0)).exp()
}

/// `a / (2 pi e n^2) * e^{2 H / (a - 1)}`: the frequency-error bound from a conditional entropy `H`.
pub fn entropy_bound_freq(h: f64, a: usize, n: u64) -> f64 {
    entropy_bound_distr(h, a) / (n as f64 * n as f64)
}

/// Exact MSEs of binary randomised response with the unbiased oracle:
/// `(2/n (e^eps/(e^eps-1)^2 + E[P_1 P_2]), 2 e^eps / (n (e^eps-1)^2))`.
pub fn rr_exact_mse(epsilon: f64, n: u64, prior: &DirichletPrior) -> Result<(f64, f64)> {
    if prior.alphabet_size() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: prior.alphabet_size() });
    }
    if !(epsilon > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("need epsilon > 0 and n >= 1".into()));
    }
    let n = n as f64;
    let core = epsilon.exp() / epsilon.exp_m1().powi(2);
    Ok((2.0 / n * (core + prior.cross_moment(0, 1)), 2.0 * core / n))
}

/// Everything the `bounds` command reports for one mechanism and prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub a: usize,
    pub b: usize,
    pub epsilon: f64,
    pub n: u64,
    pub gamma_mu: f64,
    pub gamma_stderr: f64,
    pub delta_mu: f64,
    pub delta_stderr: f64,
    pub mc_samples: usize,
    pub rejected: usize,
    pub eps_bound_gamma: f64,
    pub eps_bound_delta: f64,
    /// `a / (n (e^eps - 1)^2)`.
    pub mse_lower_distr: f64,
    /// `a e^{-b eps / (2(a-1))} / (n (e^eps - 1)^2)`.
    pub mse_lower_freq: f64,
    /// `a / (2 pi e) e^{2 gamma / (a-1)} / n`.
    pub linalg_lower_distr: f64,
    /// `a / (2 pi e) e^{2 delta / (a-1)} / n`.
    pub linalg_lower_freq: f64,
}

/// Estimates the constants and evaluates every bound at `n` users.
pub fn bound_report(q: &Mechanism, prior: &DirichletPrior, samples: usize, seed: u64, n: u64) -> Result<BoundReport> {
    let (a, b) = (q.input_size(), q.output_size());
    let epsilon = q.ldp_epsilon();
    let gd = gamma_delta_mc(q, prior, samples, seed)?;
    let (mse_lower_distr, mse_lower_freq) = eps_lower_bounds(a, b, epsilon, n)?;
    Ok(BoundReport {
        a,
        b,
        epsilon,
        n,
        eps_bound_gamma: eps_bound_gamma(a, epsilon),
        eps_bound_delta: eps_bound_delta(a, b, epsilon),
        mse_lower_distr,
        mse_lower_freq,
        linalg_lower_distr: entropy_bound_distr(gd.gamma_mu, a) / n as f64,
        linalg_lower_freq: entropy_bound_distr(gd.delta_mu, a) / n as f64,
        gamma_mu: gd.gamma_mu,
        gamma_stderr: gd.gamma_stderr,
        delta_mu: gd.delta_mu,
        delta_stderr: gd.delta_stderr,
        mc_samples: gd.mc_samples,
        rejected: gd.rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{rr_matrix, RrSpec};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_mechanism(rng: &mut impl Rng, a: usize, b: usize) -> Mechanism {
        loop {
            let mut m = DMatrix::from_fn(b, a, |_, _| rng.random_range(0.05..1.0));
            for mut c in m.column_iter_mut() {
                let s = c.sum();
                c /= s;
            }
            if let Ok(q) = Mechanism::new(m, "random") {
                return q;
            }
        }
    }

    #[test]
    fn det_e_is_product_of_column() {
        let mut rng = rng_from_seed(11);
        for _ in 0..100 {
            let a = rng.random_range(2..=8);
            let b = rng.random_range(a..=12);
            let q = random_mechanism(&mut rng, a, b);
            for x in 0..a {
                let det = matrix_e(&q, x).unwrap().determinant();
                let prod: f64 = (0..b).map(|y| q.prob(y, x)).product();
                assert!(((det - prod) / prod).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn d_for_binary_rr_at_uniform() {
        let q = rr_matrix(&RrSpec::new(2, 0.7).unwrap());
        let d = matrix_d(&q, &Distribution::uniform(2)).unwrap();
        let (k, f) = (q.prob(0, 0), q.prob(1, 0));
        // 2 Q^T Q written out by hand.
        let want = [[2.0 * (k * k + f * f), 4.0 * k * f], [4.0 * k * f, 2.0 * (k * k + f * f)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
        assert!(matrix_d(&q, &Distribution::point_mass(2, 0)).is_err());
    }

    #[test]
    fn g_at_point_mass_is_e() {
        let q = random_mechanism(&mut rng_from_seed(3), 3, 5);
        for x in 0..3 {
            assert_eq!(matrix_g(&q, &Distribution::point_mass(3, x)).unwrap(), matrix_e(&q, x).unwrap());
        }
    }

    #[test]
    fn matrices_are_positive_definite() {
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            let a = rng.random_range(2..=6);
            let b = rng.random_range(a..=9);
            let q = random_mechanism(&mut rng, a, b);
            let p = DirichletPrior::uniform(a).sample(&mut rng);
            assert!(matrix_d(&q, &p).unwrap().cholesky().is_some());
            assert!(matrix_g(&q, &p).unwrap().cholesky().is_some());
            for x in 0..a {
                assert!(matrix_e(&q, x).unwrap().cholesky().is_some());
            }
        }
    }

    #[test]
    fn log_det_matches_determinant() {
        let q = random_mechanism(&mut rng_from_seed(5), 4, 6);
        let d = matrix_d(&q, &Distribution::uniform(4)).unwrap();
        assert!((log_det_spd(&d).unwrap() - d.determinant().ln()).abs() < 1e-9);
        assert!(log_det_spd(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn constants_respect_epsilon_bounds() {
        for (a, eps) in [(2, 1.0), (4, 0.5)] {
            let q = rr_matrix(&RrSpec::new(a, eps).unwrap());
            let gd = gamma_delta_mc(&q, &DirichletPrior::jeffreys(a), 2000, 1).unwrap();
            assert!(gd.gamma_mu >= eps_bound_gamma(a, eps) - 3.0 * gd.gamma_stderr);
            assert!(gd.delta_mu >= eps_bound_delta(a, a, eps) - 3.0 * gd.delta_stderr);
        }
    }

    #[test]
    fn relabelling_outputs_leaves_constants_alone() {
        let q = random_mechanism(&mut rng_from_seed(6), 3, 4);
        let prior = DirichletPrior::jeffreys(3);
        let base = gamma_delta_mc(&q, &prior, 500, 9).unwrap();
        let perm = q.permute_outputs(&[2, 0, 3, 1]).unwrap();
        let other = gamma_delta_mc(&perm, &prior, 500, 9).unwrap();
        assert!((base.gamma_mu - other.gamma_mu).abs() < 3.0 * base.gamma_stderr);
        assert!((base.delta_mu - other.delta_mu).abs() < 3.0 * base.delta_stderr);
        // Same draws, so the agreement is in fact much tighter.
        assert!((base.delta_mu - other.delta_mu).abs() < 1e-9);
    }

    #[test]
    fn mc_is_bit_reproducible() {
        let q = rr_matrix(&RrSpec::new(3, 1.0).unwrap());
        let prior = DirichletPrior::jeffreys(3);
        let a = gamma_delta_mc(&q, &prior, 300, 42).unwrap();
        let b = gamma_delta_mc(&q, &prior, 300, 42).unwrap();
        assert_eq!(a.gamma_mu.to_bits(), b.gamma_mu.to_bits());
        assert_eq!(a.delta_mu.to_bits(), b.delta_mu.to_bits());
        assert!(gamma_delta_mc(&q, &prior, 99, 42).is_err());
    }

    #[test]
    fn eps_bound_values() {
        let (d, _) = eps_lower_bounds(2, 2, 1.0, 1000).unwrap();
        let e1 = std::f64::consts::E - 1.0;
        assert!((d - 2.0 / (1000.0 * e1 * e1)).abs() < 1e-18);
        assert!((d - 6.774e-4).abs() < 5e-7);
        let eps = 0.01;
        let ratio = eps_lower_bounds(2, 2, eps, 1).unwrap().0 / (2.0 / (eps * eps));
        assert!((0.99..=1.0).contains(&ratio));
        assert!(eps_lower_bounds(1, 2, 1.0, 1).is_err());
    }

    #[test]
    fn rr_exact_values() {
        let (d, f) = rr_exact_mse(1.0, 10_000, &DirichletPrior::jeffreys(2)).unwrap();
        let e = std::f64::consts::E;
        assert!((f - 2.0 * e / (1e4 * (e - 1.0) * (e - 1.0))).abs() < 1e-18);
        assert!((f - 1.8412e-4).abs() < 5e-8);
        assert!((d - 2e-4 * (e / ((e - 1.0) * (e - 1.0)) + 0.125)).abs() < 1e-15);
        for eps in [0.2, 0.5, 1.0, 2.0] {
            let (_, f) = rr_exact_mse(eps, 100, &DirichletPrior::jeffreys(2)).unwrap();
            assert!(f >= eps_lower_bounds(2, 2, eps, 100).unwrap().1);
        }
    }

    #[test]
    fn entropy_forms() {
        assert!((entropy_bound_distr(0.0, 2) - 0.11709).abs() < 1e-5);
        assert!(entropy_bound_distr(0.1, 3) > entropy_bound_distr(0.0, 3));
        assert!((entropy_bound_freq(0.3, 4, 10) - entropy_bound_distr(0.3, 4) / 100.0).abs() < 1e-18);
        // Composing with the epsilon bound on gamma recovers a / (e^eps - 1)^2.
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let a = rng.random_range(2..=64);
            let eps = rng.random_range(0.05..4.0);
            let lhs = entropy_bound_distr(eps_bound_gamma(a, eps), a);
            let rhs = a as f64 / eps.exp_m1().powi(2);
            assert!(((lhs - rhs) / rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn report_fields() {
        let q = rr_matrix(&RrSpec::new(2, 1.0).unwrap());
        let r = bound_report(&q, &DirichletPrior::jeffreys(2), 200, 7, 1000).unwrap();
        assert_eq!((r.a, r.b, r.mc_samples, r.rejected), (2, 2, 200, 0));
        assert!(r.gamma_stderr >= 0.0 && r.delta_stderr >= 0.0);
        assert!(r.linalg_lower_freq >= r.mse_lower_freq);
    }

    #[test]
    fn pairwise_mean() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
