//! Pass/fail of the self-test does not depend on the seed, and a fixed seed
//! gives identical results.

use corrlab::selftest::{run_all, run_suite, Config};

#[test]
fn quick_suite_passes_for_ten_seeds() {
    for seed in 0..10 {
        let report = run_all(&Config {
            seed,
            quick: true,
            ..Config::default()
        });
        for s in &report.suites {
            assert!(s.passed, "seed {seed}: suite {} failed", s.id);
        }
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let cfg = Config {
        quick: true,
        ..Config::default()
    };
    for id in [1, 3, 7] {
        let (_, a) = run_suite(id, &cfg);
        let (_, b) = run_suite(id, &cfg);
        let key = |c: &corrlab::selftest::CaseRecord| (c.case.clone(), c.residual.map(f64::to_bits), c.passed);
        assert_eq!(a.iter().map(key).collect::<Vec<_>>(), b.iter().map(key).collect::<Vec<_>>());
    }
}
