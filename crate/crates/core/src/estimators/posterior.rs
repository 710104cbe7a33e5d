//! Exact posterior mean of `P` under a Dirichlet prior.
//!
//! Given reports `y`, the posterior of `P` is a mixture over input
//! sequences `x` of `Dirichlet(gamma + t(x))` with weights proportional to
//! `B(gamma + t(x)) / B(gamma) * prod_i Q_{y_i|x_i}`. Its mean and variance
//! follow from the mixture moments of the components.
//!
//! Two evaluation routes are provided and must agree: a direct enumeration
//! of all `a^n` input sequences, and a sum over joint tallies `S_{y|x}`
//! consistent with the output tally, weighted by multinomial coefficients.
//! Everything is accumulated in the log domain.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domain::{DirichletPrior, Distribution, Mechanism, TallyVector};
use crate::error::{Error, Result};

/// Maximum number of mixture components summed by one call.
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Maximum total number of terms for the exact MSE.
pub const MSE_BUDGET: f64 = 5e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult {
    /// Posterior mean of `P`, the MSE-optimal estimate.
    pub mean: Distribution,
    /// Posterior mean of the empirical frequencies `F`; absent when `n = 0`.
    pub freq_mean: Option<Distribution>,
    /// `ln C_y = ln P(Y = y)` for the observed report sequence.
    pub log_normalizer: f64,
    /// `sum_x w_{x|y} (m_{x,a}^2 + sigma_{x,a}^2)` per coordinate.
    pub second_moments: Vec<f64>,
    /// Posterior variances `Var(P_a | Y = y)`.
    pub variances: Vec<f64>,
    /// `C_y * sum_a Var(P_a | Y = y)`: this sequence's share of the optimal MSE.
    pub mse_contribution: f64,
}

struct Prepared<'a> {
    gamma: &'a [f64],
    n: usize,
    log_q: Vec<Vec<f64>>,
    /// `ln Gamma(gamma_x + k)` for `k = 0..=n`.
    lgamma: Vec<Vec<f64>>,
    log_beta_norm: f64,
}

impl<'a> Prepared<'a> {
    fn new(q: &'a Mechanism, prior: &'a DirichletPrior, n: usize) -> Result<Self> {
        let a = q.input_size();
        if prior.alphabet_size() != a {
            return Err(Error::DimensionMismatch { expected: a, actual: prior.alphabet_size() });
        }
        let gamma = prior.gamma();
        let conc = prior.concentration();
        let log_q = (0..q.output_size())
            .map(|y| (0..a).map(|x| q.prob(y, x).ln()).collect())
            .collect();
        let lgamma = gamma.iter().map(|&g| (0..=n).map(|k| ln_gamma(g + k as f64)).collect()).collect();
        // -ln B(gamma) - ln Gamma(sum gamma + n), the t-independent part.
        let log_beta_norm = ln_gamma(conc) - gamma.iter().map(|&g| ln_gamma(g)).sum::<f64>()
            - ln_gamma(conc + n as f64);
        Ok(Self { gamma, n, log_q, lgamma, log_beta_norm })
    }

    /// `ln(B(gamma + t) / B(gamma))`.
    fn log_beta_ratio(&self, t: &[u64]) -> f64 {
        self.log_beta_norm + t.iter().enumerate().map(|(x, &k)| self.lgamma[x][k as usize]).sum::<f64>()
    }
}

/// Streaming log-sum-exp accumulator of mixture moments.
struct Mixture<'a> {
    prep: &'a Prepared<'a>,
    max: f64,
    z: f64,
    m: Vec<f64>,
    m2: Vec<f64>,
    f: Vec<f64>,
}

impl<'a> Mixture<'a> {
    fn new(prep: &'a Prepared<'a>) -> Self {
        let a = prep.gamma.len();
        Self { prep, max: f64::NEG_INFINITY, z: 0.0, m: vec![0.0; a], m2: vec![0.0; a], f: vec![0.0; a] }
    }

    fn add(&mut self, log_w: f64, t: &[u64]) {
        if log_w > self.max {
            let r = (self.max - log_w).exp();
            self.z *= r;
            for v in self.m.iter_mut().chain(self.m2.iter_mut()).chain(self.f.iter_mut()) {
                *v *= r;
            }
            self.max = log_w;
        }
        let w = (log_w - self.max).exp();
        self.z += w;
        let denom = self.prep.gamma.iter().sum::<f64>() + self.prep.n as f64;
        for x in 0..t.len() {
            let mx = (self.prep.gamma[x] + t[x] as f64) / denom;
            let var = mx * (1.0 - mx) / (denom + 1.0);
            self.m[x] += w * mx;
            self.m2[x] += w * (mx * mx + var);
            self.f[x] += w * t[x] as f64;
        }
    }

    fn finish(self) -> Result<PosteriorResult> {
        let mean: Vec<f64> = self.m.iter().map(|v| v / self.z).collect();
        let second: Vec<f64> = self.m2.iter().map(|v| v / self.z).collect();
        let variances: Vec<f64> = second.iter().zip(&mean).map(|(s, m)| (s - m * m).max(0.0)).collect();
        let log_normalizer = self.max + self.z.ln();
        let n = self.prep.n;
        let freq_mean = if n == 0 {
            None
        } else {
            let f: Vec<f64> = self.f.iter().map(|v| v / self.z / n as f64).collect();
            Some(renormalised(f)?)
        };
        Ok(PosteriorResult {
            mean: renormalised(mean)?,
            freq_mean,
            log_normalizer,
            second_moments: second,
            mse_contribution: log_normalizer.exp() * variances.iter().sum::<f64>(),
            variances,
        })
    }
}

fn renormalised(mut v: Vec<f64>) -> Result<Distribution> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    Distribution::new(v)
}

fn check_reports(q: &Mechanism, ys: &[usize]) -> Result<()> {
    match ys.iter().find(|&&y| y >= q.output_size()) {
        Some(&y) => Err(Error::InvalidParameter(format!("report {y} outside output alphabet"))),
        None => Ok(()),
    }
}

/// Posterior mean by enumerating every input sequence in `A^n`.
pub fn posterior_mean_exact(q: &Mechanism, prior: &DirichletPrior, ys: &[usize]) -> Result<PosteriorResult> {
    check_reports(q, ys)?;
    let a = q.input_size();
    let n = ys.len();
    let terms = (a as f64).powi(n as i32);
    if terms > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { terms, budget: ENUMERATION_BUDGET });
    }
    let prep = Prepared::new(q, prior, n)?;
    let mut mix = Mixture::new(&prep);
    let mut xs = vec![0usize; n];
    let mut t = vec![0u64; a];
    loop {
        t.iter_mut().for_each(|v| *v = 0);
        let mut log_w = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            t[x] += 1;
            log_w += prep.log_q[y][x];
        }
        log_w += prep.log_beta_ratio(&t);
        mix.add(log_w, &t);

        // Odometer increment.
        let mut i = 0;
        while i < n {
            xs[i] += 1;
            if xs[i] < a {
                break;
            }
            xs[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    mix.finish()
}

/// Posterior mean from the output tally alone, summing over joint tallies.
///
/// The result is for any single report sequence with tally `s`; the
/// posterior depends on the reports only through `s`.
pub fn posterior_mean_tallies(q: &Mechanism, prior: &DirichletPrior, s: &TallyVector) -> Result<PosteriorResult> {
    if s.len() != q.output_size() {
        return Err(Error::DimensionMismatch { expected: q.output_size(), actual: s.len() });
    }
    let terms = joint_class_count(q.input_size(), s.counts());
    if terms > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { terms, budget: ENUMERATION_BUDGET });
    }
    let prep = Prepared::new(q, prior, s.total() as usize)?;
    posterior_from_classes(&prep, s.counts())
}

fn posterior_from_classes(prep: &Prepared<'_>, s: &[u64]) -> Result<PosteriorResult> {
    let a = prep.gamma.len();
    let n = prep.n;
    let ln_fact: Vec<f64> = (0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect();
    // Per output symbol: every split of s_y over the inputs, with
    // its log multinomial coefficient plus sum_x s_{y|x} ln Q_{y|x}.
    let splits: Vec<Vec<(Vec<u64>, f64)>> = s
        .iter()
        .enumerate()
        .map(|(y, &sy)| {
            compositions(sy, a)
                .into_iter()
                .map(|c| {
                    let lw = ln_fact[sy as usize]
                        + c.iter().enumerate().map(|(x, &k)| k as f64 * prep.log_q[y][x] - ln_fact[k as usize]).sum::<f64>();
                    (c, lw)
                })
                .collect()
        })
        .collect();

    let mut mix = Mixture::new(prep);
    let mut idx = vec![0usize; splits.len()];
    let mut t = vec![0u64; a];
    loop {
        t.iter_mut().for_each(|v| *v = 0);
        let mut log_w = 0.0;
        for (y, &i) in idx.iter().enumerate() {
            let (c, lw) = &splits[y][i];
            log_w += lw;
            for (tx, cx) in t.iter_mut().zip(c) {
                *tx += cx;
            }
        }
        mix.add(log_w + prep.log_beta_ratio(&t), &t);

        let mut y = 0;
        while y < idx.len() {
            idx[y] += 1;
            if idx[y] < splits[y].len() {
                break;
            }
            idx[y] = 0;
            y += 1;
        }
        if y == idx.len() {
            break;
        }
    }
    mix.finish()
}

/// Exact MSE of the posterior-mean estimator for `n` users:
/// `sum_y C_y sum_a Var(P_a | Y = y)`, grouping report sequences by tally.
pub fn posterior_mse_exact(q: &Mechanism, prior: &DirichletPrior, n: usize) -> Result<f64> {
    mse_over_tallies(q, prior, n, |_, _| 0.0)
}

/// Exact MSE of an arbitrary tally-based estimator:
/// `sum_y C_y sum_a (Var(P_a | y) + (m_{y,a} - est_a)^2)`.
pub fn exact_mse_of<F>(q: &Mechanism, prior: &DirichletPrior, n: usize, estimator: F) -> Result<f64>
where
    F: Fn(&TallyVector) -> Vec<f64>,
{
    mse_over_tallies(q, prior, n, |s, post| {
        let est = estimator(&TallyVector::new(s.to_vec()));
        post.mean.probs().iter().zip(&est).map(|(m, e)| (m - e) * (m - e)).sum()
    })
}

fn mse_over_tallies<F>(q: &Mechanism, prior: &DirichletPrior, n: usize, excess: F) -> Result<f64>
where
    F: Fn(&[u64], &PosteriorResult) -> f64,
{
    let b = q.output_size();
    let a = q.input_size();
    let tallies = compositions(n as u64, b);
    let terms: f64 = tallies.iter().map(|s| joint_class_count(a, s)).sum();
    if terms > MSE_BUDGET {
        return Err(Error::BudgetExceeded { terms, budget: MSE_BUDGET });
    }
    let prep = Prepared::new(q, prior, n)?;
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let mut total = 0.0;
    for s in &tallies {
        let post = posterior_from_classes(&prep, s)?;
        let log_mult = ln_n_fact - s.iter().map(|&k| ln_gamma(k as f64 + 1.0)).sum::<f64>();
        let per_seq = post.variances.iter().sum::<f64>() + excess(s, &post);
        total += (log_mult + post.log_normalizer).exp() * per_seq;
    }
    Ok(total)
}

/// Number of joint tallies with the given row sums: `prod_y C(s_y + a - 1, a - 1)`.
fn joint_class_count(a: usize, s: &[u64]) -> f64 {
    s.iter()
        .map(|&sy| {
            let mut c = 1.0;
            for i in 1..a {
                c *= (sy as f64 + i as f64) / i as f64;
            }
            c
        })
        .product()
}

/// All vectors of `parts` non-negative integers summing to `total`, in lexicographic order.
pub fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = vec![0u64; parts];
    fn rec(rest: u64, i: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i + 1 == cur.len() {
            cur[i] = rest;
            out.push(cur.clone());
            return;
        }
        for k in 0..=rest {
            cur[i] = k;
            rec(rest - k, i + 1, cur, out);
        }
    }
    if parts > 0 {
        rec(total, 0, &mut cur, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{rr_matrix, RrSpec};

    #[test]
    fn no_data_gives_prior_moments() {
        let q = rr_matrix(&RrSpec::new(3, 1.0).unwrap());
        let prior = DirichletPrior::new(vec![1.0, 2.0, 5.0]).unwrap();
        let r = posterior_mean_exact(&q, &prior, &[]).unwrap();
        for (u, v) in r.mean.probs().iter().zip(prior.mean().probs()) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(r.log_normalizer.abs() < 1e-14);
        assert!(r.freq_mean.is_none());
        let mse = posterior_mse_exact(&q, &prior, 0).unwrap();
        let want: f64 = prior.variances().iter().sum();
        assert!((mse - want).abs() < 1e-14);
    }

    #[test]
    fn near_noiseless_single_report() {
        let q = rr_matrix(&RrSpec::new(2, 20.0).unwrap());
        let r = posterior_mean_exact(&q, &DirichletPrior::uniform(2), &[0]).unwrap();
        // Beta(2, 1) posterior mean.
        assert!((r.mean.probs()[0] - 2.0 / 3.0).abs() < 1e-4);
        // Two-term sum written out.
        let (k, f) = (q.prob(0, 0), q.prob(0, 1));
        let want = (k * 0.5 * (2.0 / 3.0) + f * 0.5 * (1.0 / 3.0)) / (k * 0.5 + f * 0.5);
        assert!((r.mean.probs()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn enumeration_and_tally_classes_agree() {
        let q = rr_matrix(&RrSpec::new(2, 1.0).unwrap());
        let prior = DirichletPrior::jeffreys(2);
        let ys = [0, 1, 1, 0];
        let e = posterior_mean_exact(&q, &prior, &ys).unwrap();
        let t = posterior_mean_tallies(&q, &prior, &TallyVector::from_symbols(&ys, 2).unwrap()).unwrap();
        for (u, v) in e.mean.probs().iter().zip(t.mean.probs()) {
            assert!((u - v).abs() < 1e-10);
        }
        assert!((e.log_normalizer - t.log_normalizer).abs() < 1e-10);
        for (u, v) in e.variances.iter().zip(&t.variances) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn normalisers_sum_to_one_over_sequences() {
        // sum over all y in B^n of C_y = 1.
        let q = Mechanism::from_rows(&[vec![0.7, 0.2, 0.3], vec![0.2, 0.5, 0.3], vec![0.1, 0.3, 0.4]], "m").unwrap();
        let prior = DirichletPrior::new(vec![0.5, 1.0, 2.0]).unwrap();
        let n = 3;
        let mut total = 0.0;
        for s in compositions(n as u64, 3) {
            let r = posterior_mean_tallies(&q, &prior, &TallyVector::new(s.clone())).unwrap();
            let mult = ln_gamma(n as f64 + 1.0) - s.iter().map(|&k| ln_gamma(k as f64 + 1.0)).sum::<f64>();
            total += (mult + r.log_normalizer).exp();
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn more_data_lowers_optimal_mse() {
        let q = rr_matrix(&RrSpec::new(2, 1.0).unwrap());
        let prior = DirichletPrior::jeffreys(2);
        let m2 = posterior_mse_exact(&q, &prior, 2).unwrap();
        let m6 = posterior_mse_exact(&q, &prior, 6).unwrap();
        assert!(m6 < m2);
    }

    #[test]
    fn perturbing_the_posterior_mean_never_helps() {
        let q = rr_matrix(&RrSpec::new(2, 1.0).unwrap());
        let prior = DirichletPrior::jeffreys(2);
        let n = 4;
        let opt = posterior_mse_exact(&q, &prior, n).unwrap();
        let via_estimator = exact_mse_of(&q, &prior, n, |s| {
            posterior_mean_tallies(&q, &prior, s).unwrap().mean.into_vec()
        })
        .unwrap();
        assert!((opt - via_estimator).abs() < 1e-14);
        for dir in [[0.01, -0.01], [-0.01, 0.01], [0.01, 0.0], [0.0, -0.01]] {
            let perturbed = exact_mse_of(&q, &prior, n, |s| {
                let m = posterior_mean_tallies(&q, &prior, s).unwrap().mean.into_vec();
                vec![m[0] + dir[0], m[1] + dir[1]]
            })
            .unwrap();
            assert!(perturbed >= opt, "{dir:?}");
        }
    }

    #[test]
    fn budget_refusal() {
        let q = rr_matrix(&RrSpec::new(4, 1.0).unwrap());
        let ys = vec![0usize; 12];
        assert!(matches!(
            posterior_mean_exact(&q, &DirichletPrior::jeffreys(4), &ys),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(posterior_mean_exact(&q, &DirichletPrior::jeffreys(3), &[0]).is_err());
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
        assert_eq!(joint_class_count(3, &[4]), 15.0);
    }
}
