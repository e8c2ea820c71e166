//! Monte Carlo invariants beyond the acceptance criteria.

use mixpois_core::limit_lab::{run_clt_trend, run_scaling_experiment, ExperimentConfig};
use mixpois_core::MixingDistribution;

#[test]
fn zero_inflated_ks_distance_decreases_on_average() {
    let m = MixingDistribution::zero_inflated(0.3, MixingDistribution::gamma(2.0, 1.0).unwrap())
        .unwrap();
    let mut cfg = ExperimentConfig::new(m, vec![10.0, 100.0, 1000.0], 200_000, 11);
    cfg.max_moment_order = 2;
    let r = run_clt_trend(&cfg, 5).unwrap();
    let trend: Vec<_> = r
        .verdicts
        .iter()
        .filter(|v| v.id.starts_with("clt.ks_trend"))
        .collect();
    assert_eq!(trend.len(), 2);
    assert!(trend.iter().all(|v| v.passed), "{trend:?}");
}

#[test]
fn lognormal_scaling_is_exact_but_flagged() {
    let m = MixingDistribution::lognormal(0.0, 0.4).unwrap();
    let mut cfg = ExperimentConfig::new(m, vec![10.0, 100.0], 100_000, 3);
    cfg.max_moment_order = 3;
    let r = run_scaling_experiment(&cfg).unwrap();
    assert!(!r.within_hypotheses);
    assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
}
