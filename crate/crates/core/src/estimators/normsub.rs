use crate::domain::{Distribution, SignedVector};

/// Norm-Sub post-processing: finds the shift `delta` with
/// `sum_x max(v_x - delta, 0) = 1` and returns `max(v - delta, 0)`.
pub fn norm_sub(v: &SignedVector) -> Distribution {
    norm_sub_with_shift(v).0
}

/// [`norm_sub`] together with the shift it applied.
pub fn norm_sub_with_shift(v: &SignedVector) -> (Distribution, f64) {
    let vals = v.values();
    assert!(!vals.is_empty(), "norm-sub of an empty vector");
    let mass = |d: f64| vals.iter().map(|&x| (x - d).max(0.0)).sum::<f64>();
    let hi0 = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // mass(hi) = 0 and mass(max - 1) >= 1, so the root is bracketed.
    let (mut lo, mut hi) = (hi0 - 1.0, hi0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Settle the support, then solve the shift exactly on it.
    let delta = 0.5 * (lo + hi);
    let support: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > delta).collect();
    let delta = (support.iter().map(|&i| vals[i]).sum::<f64>() - 1.0) / support.len() as f64;
    let probs: Vec<f64> = vals.iter().map(|&x| (x - delta).max(0.0)).collect();
    let p = Distribution::new(probs).expect("norm-sub output lies on the simplex");
    (p, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::simplex_project;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> SignedVector {
        SignedVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(norm_sub(&sv(&[0.5, 0.5])).probs(), &[0.5, 0.5]);

        let (p, d) = norm_sub_with_shift(&sv(&[1.2, -0.2]));
        assert!((p.probs()[0] - 1.0).abs() < 1e-12 && p.probs()[1] == 0.0);
        assert!((d - 0.2).abs() < 1e-12);

        // No clamping, so delta = (sum v - 1) / a = 1/6.
        let (p, d) = norm_sub_with_shift(&sv(&[0.9, 0.3, 0.3]));
        for (got, want) in p.probs().iter().zip([11.0 / 15.0, 2.0 / 15.0, 2.0 / 15.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((d - 1.0 / 6.0).abs() < 1e-12);
        // Independent oracle: plain bisection on the defining equation.
        let v = [0.9, 0.3, 0.3];
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if v.iter().map(|x: &f64| (x - mid).max(0.0)).sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((d - lo).abs() < 1e-12);
    }

    #[test]
    fn equal_entries_give_uniform() {
        let p = norm_sub(&sv(&[3.0, 3.0, 3.0, 3.0]));
        assert!(p.probs().iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let p = norm_sub(&sv(&[-1.0, -1.0]));
        assert!(p.probs().iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn valid_ordered_and_equal_to_projection(v in prop::collection::vec(-3.0f64..3.0, 1..20)) {
            let p = norm_sub(&sv(&v));
            prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] < v[j] {
                        prop_assert!(p.probs()[i] <= p.probs()[j]);
                    }
                }
            }
            // The sort-based Euclidean projection solves the same fixed point.
            let q = simplex_project(&sv(&v));
            for (a, b) in p.probs().iter().zip(q.probs()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
