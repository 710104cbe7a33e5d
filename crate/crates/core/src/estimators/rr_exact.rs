use crate::domain::{Distribution, TallyVector};
use crate::error::{Error, Result};
use crate::mechanisms::RrSpec;

/// Exact maximum-likelihood estimate for randomised response, `O(a log a)`.
///
/// From the KKT conditions, on the support `A'` of the optimum
/// `p_x = (s_x / S') ((#A') / (e^eps - 1) + 1) - 1 / (e^eps - 1)` with
/// `S' = sum_{x in A'} s_x`, and the support consists of the largest
/// tallies. Symbols are dropped smallest-first until the smallest remaining
/// one gets a non-negative estimate. Ties are broken by index.
pub fn rr_mle_exact(spec: &RrSpec, s: &TallyVector) -> Result<Distribution> {
    let a = spec.a;
    if s.len() != a {
        return Err(Error::DimensionMismatch { expected: a, actual: s.len() });
    }
    if s.total() == 0 {
        return Err(Error::EmptyTally);
    }
    let c = spec.epsilon.exp_m1();
    let counts = s.counts();

    let mut order: Vec<usize> = (0..a).collect();
    order.sort_by_key(|&i| counts[i]);

    // suffix[k] = sum of the a - k largest tallies.
    let mut suffix = vec![0u64; a + 1];
    for k in (0..a).rev() {
        suffix[k] = suffix[k + 1] + counts[order[k]];
    }

    let mut k = 0;
    while k + 1 < a {
        let smallest = counts[order[k]];
        let drop = smallest == 0
            || ((a - k) as f64 + c) * (smallest as f64) < suffix[k] as f64;
        if !drop {
            break;
        }
        k += 1;
    }

    let support = (a - k) as f64;
    let mass = suffix[k] as f64;
    let mut p = vec![0.0; a];
    for &x in &order[k..] {
        p[x] = ((counts[x] as f64 / mass) * (support / c + 1.0) - 1.0 / c).max(0.0);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Distribution::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fo_estimate_rr;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn equal_tallies_give_uniform() {
        let spec = RrSpec::new(5, 0.4).unwrap();
        let p = rr_mle_exact(&spec, &TallyVector::new(vec![7; 5])).unwrap();
        assert!(p.probs().iter().all(|&v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn interior_case_equals_frequency_oracle() {
        let mut rng = rng_from_seed(31);
        let mut checked = 0;
        while checked < 100 {
            let a = rng.random_range(2..10);
            let spec = RrSpec::new(a, rng.random_range(0.5..3.0)).unwrap();
            let s = TallyVector::new((0..a).map(|_| rng.random_range(20..200)).collect());
            let fo = fo_estimate_rr(&spec, &s).unwrap();
            if fo.values().iter().any(|&v| v <= 0.0) {
                continue;
            }
            let p = rr_mle_exact(&spec, &s).unwrap();
            for (u, v) in p.probs().iter().zip(fo.values()) {
                assert!((u - v).abs() < 1e-12);
            }
            checked += 1;
        }
    }

    #[test]
    fn sums_to_one_and_zeroes_small_tallies() {
        let spec = RrSpec::new(4, 1.0).unwrap();
        let p = rr_mle_exact(&spec, &TallyVector::new(vec![70, 20, 9, 1])).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.probs()[3], 0.0);
        assert!(p.probs()[0] > p.probs()[1]);
    }

    #[test]
    fn single_nonzero_tally() {
        let spec = RrSpec::new(3, 0.5).unwrap();
        let p = rr_mle_exact(&spec, &TallyVector::new(vec![0, 4, 0])).unwrap();
        assert_eq!(p.probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = RrSpec::new(3, 0.5).unwrap();
        assert!(rr_mle_exact(&spec, &TallyVector::zeros(3)).is_err());
        assert!(rr_mle_exact(&spec, &TallyVector::new(vec![1, 2])).is_err());
    }
}
