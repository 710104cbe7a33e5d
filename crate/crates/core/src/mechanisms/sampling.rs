use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;

use crate::domain::{DirichletPrior, Distribution, Mechanism, TallyVector};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Perturbs every input through its column of `q`. Deterministic for a seed.
pub fn sample_reports(q: &Mechanism, inputs: &[usize], seed: u64) -> Result<(Vec<usize>, TallyVector)> {
    sample_reports_with(q, inputs, &mut rng_from_seed(seed))
}

/// As [`sample_reports`], drawing from a caller-owned generator.
pub fn sample_reports_with<R: Rng + ?Sized>(
    q: &Mechanism,
    inputs: &[usize],
    rng: &mut R,
) -> Result<(Vec<usize>, TallyVector)> {
    let a = q.input_size();
    if let Some(&x) = inputs.iter().find(|&&x| x >= a) {
        return Err(Error::InvalidParameter(format!("input {x} outside alphabet of size {a}")));
    }
    let columns: Vec<WeightedIndex<f64>> = (0..a)
        .map(|x| WeightedIndex::new(q.matrix().column(x).iter().copied()).expect("stochastic column"))
        .collect();
    let outputs: Vec<usize> = inputs.iter().map(|&x| columns[x].sample(rng)).collect();
    let tally = TallyVector::from_symbols(&outputs, q.output_size())?;
    Ok((outputs, tally))
}

/// Draws `n` i.i.d. inputs from `p`.
pub fn sample_private_data<R: Rng + ?Sized>(p: &Distribution, n: usize, rng: &mut R) -> (Vec<usize>, TallyVector) {
    let w = WeightedIndex::new(p.probs().iter().copied()).expect("distribution has positive mass");
    let xs: Vec<usize> = (0..n).map(|_| w.sample(rng)).collect();
    let t = TallyVector::from_symbols(&xs, p.alphabet_size()).expect("samples are in range");
    (xs, t)
}

/// Draws `P ~ Dirichlet(gamma)` from a seed.
pub fn sample_prior(prior: &DirichletPrior, seed: u64) -> Distribution {
    prior.sample(&mut rng_from_seed(seed))
}
