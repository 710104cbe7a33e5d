use ldpest::domain::Mechanism;
use ldpest::mechanisms::{rr_matrix, sample_reports, ue_matrix, RrSpec, UeSpec};
use ldpest::rng::rng_from_seed;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn constructed_epsilon_is_recovered() {
    let mut rng = rng_from_seed(1);
    for _ in 0..50 {
        let a = rng.random_range(2..=40);
        let eps = rng.random_range(0.05..5.0);
        let rr = rr_matrix(&RrSpec::new(a, eps).unwrap());
        assert!(rr.validate().is_empty());
        assert!((rr.ldp_epsilon() - eps).abs() < 1e-10);

        let ue = ue_matrix(&UeSpec::symmetric(a.min(8), eps).unwrap()).unwrap();
        assert!(ue.validate().is_empty());
        assert!((ue.ldp_epsilon() - eps).abs() < 1e-10);
        let oue = UeSpec::optimized(a.min(8), eps).unwrap();
        assert!((ue_matrix(&oue).unwrap().ldp_epsilon() - oue.epsilon()).abs() < 1e-10);
        assert!((oue.epsilon() - eps).abs() < 1e-10);
    }
}

#[test]
fn large_rr_epsilon() {
    let q = rr_matrix(&RrSpec::new(1024, 0.2).unwrap());
    // Independent recomputation of the max log-ratio from the entries.
    let m = q.matrix();
    let mut worst = 0.0f64;
    for y in 0..1024 {
        let row = m.row(y);
        worst = worst.max(row.max().ln() - row.min().ln());
    }
    assert!((worst - 0.2).abs() < 1e-10);
    assert!((q.ldp_epsilon() - 0.2).abs() < 1e-10);
}

#[test]
fn empirical_outputs_converge_on_random_mechanisms() {
    let mut rng = rng_from_seed(2);
    let n = 1_000_000;
    for trial in 0..3 {
        let (a, b) = (3, 5);
        let mut m = DMatrix::from_fn(b, a, |_, _| rng.random_range(0.05..1.0));
        for mut c in m.column_iter_mut() {
            let s = c.sum();
            c /= s;
        }
        let q = Mechanism::new(m, "random").unwrap();
        let x = trial % a;
        let (_, s) = sample_reports(&q, &vec![x; n], 100 + trial as u64).unwrap();
        let bound = 5.0 * (1.0 / (4.0 * n as f64)).sqrt();
        for y in 0..b {
            let got = s.counts()[y] as f64 / n as f64;
            assert!((got - q.prob(y, x)).abs() < bound, "trial {trial}, y={y}");
        }
    }
}
