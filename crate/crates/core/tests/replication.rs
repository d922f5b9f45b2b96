use wiblock::analytic::gb_mean_confirmation_time;
use wiblock::config::ScenarioConfig;
use wiblock::des::{
    replicate, run_naive_sim, run_witness_queue_sim, DesError, Estimate, WitnessQueueSim,
};

fn run(seed: u64) -> Result<WitnessQueueSim, DesError> {
    run_witness_queue_sim(0.7, 0.4, 2.0, 1.0, 2e3, seed)
}

/// Estimates of `mean_queue_len` from `groups` disjoint blocks of `n` replications.
fn group_estimates(n: usize, groups: usize) -> Vec<Estimate> {
    (0..groups)
        .map(|g| {
            let rep = replicate(n, (g * n) as u64 + 1_000_000 * n as u64, run).unwrap();
            rep.estimates["mean_queue_len"]
        })
        .collect()
}

fn rms_std_error(es: &[Estimate]) -> f64 {
    (es.iter().map(|e| e.std_error().powi(2)).sum::<f64>() / es.len() as f64).sqrt()
}

fn mean_half_width(es: &[Estimate]) -> f64 {
    es.iter().map(|e| e.half_width).sum::<f64>() / es.len() as f64
}

#[test]
fn interval_shrinks_with_square_root_of_reps() {
    let e4 = group_estimates(4, 64);
    let e16 = group_estimates(16, 16);
    let e64 = group_estimates(64, 4);
    let se_ratio_a = rms_std_error(&e4) / rms_std_error(&e16);
    let se_ratio_b = rms_std_error(&e16) / rms_std_error(&e64);
    assert!((se_ratio_a - 2.0).abs() <= 0.5, "{se_ratio_a}");
    assert!((se_ratio_b - 2.0).abs() <= 0.5, "{se_ratio_b}");
    // With 15 and 63 degrees of freedom the t quantiles nearly agree.
    let hw_ratio = mean_half_width(&e16) / mean_half_width(&e64);
    assert!((hw_ratio - 2.0).abs() <= 0.5, "{hw_ratio}");
}

#[test]
fn replication_seeds_are_split() {
    let a = replicate(4, 7, run).unwrap();
    let b = replicate(4, 8, run).unwrap();
    assert_eq!(a.seeds.len(), 4);
    assert_eq!(a.seeds[1..], b.seeds[..3]);
    let mut s = a.seeds.clone();
    s.dedup();
    assert_eq!(s.len(), 4);
}

#[test]
fn naive_des_matches_analytic_confirmation_time() {
    let cfg = ScenarioConfig::with_witnesses(2).with_rate(1.0 / 500.0);
    let r = run_naive_sim(&cfg, 2e7, 21).unwrap();
    let et = gb_mean_confirmation_time(1.0, 1.8e-3, 1000).unwrap();
    let err = (r.mean_gb_sojourn_s - et).abs() / et;
    assert!(err <= 0.05, "{} vs {et}", r.mean_gb_sojourn_s);
    assert!(!r.unstable);
    assert_eq!(r.ledger_tx_counts.gb, r.confirmed_count);
}

#[test]
fn naive_overload_is_flagged() {
    // k λ E[U] = 500 · 4.4e-3 · 555.6 > b.
    let cfg = ScenarioConfig::with_witnesses(2).with_rate(4.4e-3);
    let r = run_naive_sim(&cfg, 2e5, 3).unwrap();
    assert!(r.unstable);
    assert!(!r.warnings.is_empty());
}
