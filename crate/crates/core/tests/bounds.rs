use ldpest::bounds::{
    bound_report, entropy_bound_distr, eps_lower_bounds, gamma_delta_mc, rr_exact_mse,
};
use ldpest::domain::DirichletPrior;
use ldpest::mechanisms::{rr_matrix, RrSpec};
use ldpest::rng::rng_from_seed;

#[test]
fn binary_rr_chain() {
    let n = 500u64;
    let prior = DirichletPrior::jeffreys(2);
    for eps in [0.2, 1.0] {
        let q = rr_matrix(&RrSpec::new(2, eps).unwrap());
        let gd = gamma_delta_mc(&q, &prior, 2000, 3).unwrap();
        let exact = n as f64 * rr_exact_mse(eps, n, &prior).unwrap().1;
        let mid = entropy_bound_distr(gd.delta_mu, 2);
        let sigma = 2.0 * mid * gd.delta_stderr;
        // For binary RR, delta is the same for every P, so the first step is an equality.
        assert!(exact >= (mid - 3.0 * sigma) * (1.0 - 1e-12));
        assert!(((exact - mid) / exact).abs() < 1e-12);
        assert!(mid - 3.0 * sigma >= n as f64 * eps_lower_bounds(2, 2, eps, n).unwrap().1);
        // gamma for binary RR also obeys its distribution bound.
        let g = entropy_bound_distr(gd.gamma_mu, 2);
        assert!(g + 6.0 * g * gd.gamma_stderr >= n as f64 * eps_lower_bounds(2, 2, eps, n).unwrap().0);
    }
}

#[test]
fn jeffreys_cross_moment_matches_simulation() {
    let prior = DirichletPrior::jeffreys(2);
    let mut rng = rng_from_seed(12);
    let k = 200_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..k {
        let p = prior.sample(&mut rng);
        let v = p.probs()[0] * p.probs()[1];
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / k as f64;
    let se = ((s2 / k as f64 - mean * mean) / k as f64).sqrt();
    assert!((mean - 0.125).abs() < 3.0 * se);
    assert_eq!(prior.cross_moment(0, 1), 0.125);
}

#[test]
fn report_serialises_every_field() {
    let q = rr_matrix(&RrSpec::new(3, 1.0).unwrap());
    let r = bound_report(&q, &DirichletPrior::jeffreys(3), 200, 1, 100).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in [
        "gamma_mu",
        "gamma_stderr",
        "delta_mu",
        "delta_stderr",
        "mc_samples",
        "eps_bound_gamma",
        "eps_bound_delta",
        "mse_lower_distr",
        "mse_lower_freq",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(r.gamma_mu >= r.eps_bound_gamma - 3.0 * r.gamma_stderr);
}
