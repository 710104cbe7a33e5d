//! Likelihood maximisation over the simplex.
//!
//! Minimises `f(p) = -sum_y s_y ln((Q p)_y)` with spectral projected
//! gradient: Barzilai-Borwein trial steps, projection onto the simplex and a
//! non-monotone Armijo search that halves the step. Only outputs with
//! `s_y > 0` contribute, so unary encoding never needs all `2^a` rows.
//!
//! The solver works with the objective divided by `n`; the gradient
//! tolerance in [`MleConfig`] refers to that scaled objective.

use serde::{Deserialize, Serialize};

use crate::domain::{project_slice, Distribution, EstimateReport, Mechanism, SignedVector, TallyVector};
use crate::error::{Error, Result};
use crate::mechanisms::{BitmaskTally, UeSpec};

/// Floor applied to `(Q p)_y` inside the logarithm.
const PROB_FLOOR: f64 = 1e-300;
const ARMIJO: f64 = 1e-4;
const NONMONOTONE_MEMORY: usize = 10;
const MIN_STEP: f64 = 1e-12;
const MAX_STEP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Stop once the projected-gradient norm of the scaled objective is at most this.
    pub tolerance: f64,
    /// Starting point; uniform when absent.
    pub initial: Option<Distribution>,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self { max_iterations: 10_000, tolerance: 1e-9, initial: None }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// The observed rows of `Q` with their counts.
#[derive(Debug, Clone)]
pub struct Likelihood {
    a: usize,
    counts: Vec<f64>,
    rows: Vec<f64>,
    total: f64,
}

impl Likelihood {
    pub fn from_mechanism(q: &Mechanism, s: &TallyVector) -> Result<Self> {
        if s.len() != q.output_size() {
            return Err(Error::DimensionMismatch { expected: q.output_size(), actual: s.len() });
        }
        let a = q.input_size();
        let mut lik = Self { a, counts: Vec::new(), rows: Vec::new(), total: 0.0 };
        for (y, &c) in s.counts().iter().enumerate() {
            if c > 0 {
                lik.push(c, q.matrix().row(y).iter().copied());
            }
        }
        lik.finish()
    }

    pub fn from_unary(spec: &UeSpec, t: &BitmaskTally) -> Result<Self> {
        if t.a != spec.a {
            return Err(Error::DimensionMismatch { expected: spec.a, actual: t.a });
        }
        let mut lik = Self { a: spec.a, counts: Vec::new(), rows: Vec::new(), total: 0.0 };
        for (&mask, &c) in &t.counts {
            lik.push(c, spec.row(mask).into_iter());
        }
        lik.finish()
    }

    fn push(&mut self, count: u64, row: impl Iterator<Item = f64>) {
        self.counts.push(count as f64);
        self.rows.extend(row);
        self.total += count as f64;
    }

    fn finish(self) -> Result<Self> {
        if self.total == 0.0 {
            return Err(Error::EmptyTally);
        }
        Ok(self)
    }

    pub fn alphabet_size(&self) -> usize {
        self.a
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.counts.iter().copied().zip(self.rows.chunks_exact(self.a))
    }

    /// `-sum_y s_y ln((Q p)_y)`.
    pub fn neg_log_likelihood(&self, p: &[f64]) -> f64 {
        self.rows().map(|(c, r)| -c * dot(r, p).max(PROB_FLOOR).ln()).sum()
    }

    /// `d/dp_x = -sum_y s_y Q_{y|x} / (Q p)_y`.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.a];
        for (c, r) in self.rows() {
            let w = c / dot(r, p).max(PROB_FLOOR);
            for (gx, rx) in g.iter_mut().zip(r) {
                *gx -= w * rx;
            }
        }
        g
    }

    /// Runs the projected-gradient solver.
    pub fn maximize(&self, cfg: &MleConfig) -> Result<EstimateReport> {
        cfg.validate()?;
        let a = self.a;
        let scale = 1.0 / self.total;
        let f = |p: &[f64]| self.neg_log_likelihood(p) * scale;
        let grad = |p: &[f64]| {
            let mut g = self.gradient(p);
            g.iter_mut().for_each(|v| *v *= scale);
            g
        };

        let mut x = match &cfg.initial {
            Some(d) if d.alphabet_size() == a => d.probs().to_vec(),
            Some(d) => return Err(Error::DimensionMismatch { expected: a, actual: d.alphabet_size() }),
            None => vec![1.0 / a as f64; a],
        };
        let mut fx = f(&x);
        let mut g = grad(&x);
        let mut history = vec![fx];
        let pg0 = projected_gradient_norm(&x, &g);
        let mut step = if pg0 > 0.0 { (1.0 / pg0).clamp(MIN_STEP, MAX_STEP) } else { 1.0 };

        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.max_iterations {
            if projected_gradient_norm(&x, &g) <= cfg.tolerance {
                converged = true;
                break;
            }
            iterations += 1;

            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let d: Vec<f64> = project_slice(&trial).iter().zip(&x).map(|(t, xi)| t - xi).collect();
            let slope = dot(&g, &d);
            let reference = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

            let mut lambda = 1.0;
            let (x_new, f_new) = loop {
                let cand: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| (xi + lambda * di).max(0.0)).collect();
                let fc = f(&cand);
                if fc <= reference + ARMIJO * lambda * slope {
                    break (cand, fc);
                }
                lambda *= 0.5;
                if lambda < 1e-20 {
                    // No decrease representable at this precision.
                    break (x.clone(), fx);
                }
            };
            if x_new == x {
                break;
            }

            let g_new = grad(&x_new);
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(u, v)| u - v).collect();
            let yv: Vec<f64> = g_new.iter().zip(&g).map(|(u, v)| u - v).collect();
            let sty = dot(&s, &yv);
            step = if sty > 0.0 { (dot(&s, &s) / sty).clamp(MIN_STEP, MAX_STEP) } else { MAX_STEP };

            x = x_new;
            fx = f_new;
            g = g_new;
            history.push(fx);
            if history.len() > NONMONOTONE_MEMORY {
                history.remove(0);
            }
        }
        if !converged && projected_gradient_norm(&x, &g) <= cfg.tolerance {
            converged = true;
        }

        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        let projected = Distribution::new(x.clone())?;
        Ok(EstimateReport {
            estimate: SignedVector::new(x)?,
            objective: Some(self.neg_log_likelihood(projected.probs())),
            projected,
            estimator_name: "mle-pgd".into(),
            iterations,
            converged,
        })
    }
}

/// `|P(p - g) - p|_2`, zero exactly at a constrained stationary point.
pub fn projected_gradient_norm(p: &[f64], g: &[f64]) -> f64 {
    let t: Vec<f64> = p.iter().zip(g).map(|(x, d)| x - d).collect();
    project_slice(&t).iter().zip(p).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Maximum-likelihood estimate of `P` from output tallies of an explicit mechanism.
pub fn mle_estimate(q: &Mechanism, s: &TallyVector, cfg: &MleConfig) -> Result<EstimateReport> {
    Likelihood::from_mechanism(q, s)?.maximize(cfg)
}

/// Maximum-likelihood estimate for unary encoding from sparse bitmask tallies.
pub fn mle_estimate_ue(spec: &UeSpec, t: &BitmaskTally, cfg: &MleConfig) -> Result<EstimateReport> {
    Likelihood::from_unary(spec, t)?.maximize(cfg)
}
