//! Independent replications with Student-t intervals across runs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::rng::splitmix64;
use super::stats::mean_ci;
use super::{DesError, SimResult, WitnessQueueSim};

/// Named scalar outputs of one run.
pub trait Metrics {
    fn metrics(&self) -> Vec<(String, f64)>;
}

impl Metrics for SimResult {
    fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("confirmed_count".to_string(), self.confirmed_count as f64),
            ("dropped_count".to_string(), self.dropped_count as f64),
            ("global_count".to_string(), self.global_count as f64),
            ("local_count".to_string(), self.local_count as f64),
            ("block_count".to_string(), self.block_count as f64),
            (
                "mean_witness_sojourn_s".to_string(),
                self.mean_witness_sojourn_s,
            ),
            ("mean_gb_sojourn_s".to_string(), self.mean_gb_sojourn_s),
            ("gb_mean_queue_len".to_string(), self.gb_mean_queue_len),
            ("ledger_gb".to_string(), self.ledger_tx_counts.gb as f64),
        ];
        for (w, x) in self.mean_witness_queue_len.iter().enumerate() {
            out.push((format!("mean_witness_queue_len[{w}]"), *x));
        }
        for (w, x) in self.ledger_tx_counts.local.iter().enumerate() {
            out.push((format!("ledger_local[{w}]"), *x as f64));
        }
        out
    }
}

impl Metrics for WitnessQueueSim {
    fn metrics(&self) -> Vec<(String, f64)> {
        vec![
            ("mean_queue_len".to_string(), self.mean_queue_len),
            ("mean_sojourn_s".to_string(), self.mean_sojourn_s),
            (
                "global_service_fraction".to_string(),
                self.global_service_fraction,
            ),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_dev: f64,
    /// 95% Student-t half-width of the mean.
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, std_dev, half_width) = mean_ci(xs);
        Estimate {
            mean,
            std_dev,
            half_width,
            n: xs.len(),
        }
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Replicated<R> {
    pub n_rep: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub estimates: BTreeMap<String, Estimate>,
    pub runs: Vec<R>,
}

pub fn replication_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(base_seed.wrapping_add(index as u64))
}

/// Runs `n_rep` replications of `run(seed)` in parallel. Seeds come from
/// `base_seed + index` through SplitMix64, so the aggregate does not depend
/// on scheduling.
pub fn replicate<R, F>(n_rep: usize, base_seed: u64, run: F) -> Result<Replicated<R>, DesError>
where
    R: Metrics + Send,
    F: Fn(u64) -> Result<R, DesError> + Sync,
{
    if n_rep < 2 {
        return Err(DesError::DomainError(format!(
            "replication needs n_rep >= 2 to form an interval (got {n_rep})"
        )));
    }
    let seeds: Vec<u64> = (0..n_rep).map(|i| replication_seed(base_seed, i)).collect();
    let runs = seeds
        .par_iter()
        .map(|&s| run(s))
        .collect::<Result<Vec<R>, DesError>>()?;
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &runs {
        for (name, x) in r.metrics() {
            columns.entry(name).or_default().push(x);
        }
    }
    let estimates = columns
        .into_iter()
        .map(|(name, xs)| (name, Estimate::from_samples(&xs)))
        .collect();
    Ok(Replicated {
        n_rep,
        base_seed,
        seeds,
        estimates,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::des::run_witness_queue_sim;

    #[test]
    fn single_replication_is_rejected() {
        let err = replicate(1, 0, |s| {
            run_witness_queue_sim(0.5, 0.5, 2.0, 1.0, 100.0, s)
        })
        .unwrap_err();
        assert!(matches!(err, DesError::DomainError(_)));
    }

    #[test]
    fn deterministic_aggregate() {
        let run = |s| run_witness_queue_sim(0.5, 0.5, 2.0, 1.0, 2_000.0, s);
        let a = replicate(4, 11, run).unwrap();
        let b = replicate(4, 11, run).unwrap();
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.estimates, b.estimates);
        let c = replicate(4, 12, run).unwrap();
        assert_ne!(a.estimates["mean_queue_len"], c.estimates["mean_queue_len"]);
    }
}
