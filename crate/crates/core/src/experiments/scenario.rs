//! Scenario-level analytic pipeline: deployment, links, delivery and both
//! queue tiers for one resolved configuration.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    gb_mean_confirmation_time, ledger_growth, witness_mean_queue, AnalyticError, LedgerGrowth,
    WitnessQueueStats,
};
use crate::config::{ConfigError, ScenarioConfig};
use crate::des::rng::splitmix64;
use crate::radio::{sample_deployment, success_matrix, Deployment, LinkSuccessMatrix};
use crate::selection::{
    delivery_success_probability, global_fraction, profiles_for, SelectionError,
};

pub fn deployment_seed(cfg: &ScenarioConfig, replication: usize) -> u64 {
    splitmix64(cfg.rng_seed ^ (replication as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

pub fn deployment_and_links(
    cfg: &ScenarioConfig,
    replication: usize,
) -> (Deployment, LinkSuccessMatrix) {
    let dep = sample_deployment(cfg, deployment_seed(cfg, replication));
    let ps = success_matrix(&dep, &cfg.radio, cfg.distance_floor_m);
    (dep, ps)
}

/// Device-averaged delivery probability, averaged again over
/// `deployment_replications` independent deployments.
pub fn mean_delivery_fraction(cfg: &ScenarioConfig) -> Result<f64, SelectionError> {
    let l = cfg.traffic.retry_limit;
    let per_deployment = (0..cfg.deployment_replications)
        .into_par_iter()
        .map(|j| {
            let (_, ps) = deployment_and_links(cfg, j);
            let mut sum = 0.0;
            for row in ps.rows() {
                sum += delivery_success_probability(row, l)?;
            }
            Ok(sum / ps.num_devices() as f64)
        })
        .collect::<Result<Vec<f64>, SelectionError>>()?;
    Ok(per_deployment.iter().sum::<f64>() / per_deployment.len() as f64)
}

/// Symmetric mean-field view of a scenario: every witness receives `1/v` of
/// the delivered traffic and `(v-1)/v` of it is global.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioAnalysis {
    pub num_witnesses: usize,
    pub per_device_rate_tps: f64,
    pub delivery_fraction: f64,
    pub delivered_tps: f64,
    pub global_fraction: f64,
    pub witness_rate_tps: f64,
    pub witness: Option<WitnessQueueStats<f64>>,
    pub lambda_b_tps: f64,
    pub gb_utilization: f64,
    pub mean_confirmation_s: Option<f64>,
    pub ledger: LedgerGrowth<f64>,
}

pub fn analyze_symmetric(
    cfg: &ScenarioConfig,
    lambda: f64,
    delivery_fraction: f64,
) -> ScenarioAnalysis {
    let v = cfg.num_witnesses;
    let q = &cfg.queue;
    let delivered = cfg.num_devices as f64 * lambda * delivery_fraction;
    let p: f64 = global_fraction(v);
    let witness_rate = delivered / v as f64;
    let lambda_b = p * delivered;
    ScenarioAnalysis {
        num_witnesses: v,
        per_device_rate_tps: lambda,
        delivery_fraction,
        delivered_tps: delivered,
        global_fraction: p,
        witness_rate_tps: witness_rate,
        witness: witness_mean_queue(witness_rate, p, q.mu1_tps, q.mu2_tps).ok(),
        lambda_b_tps: lambda_b,
        gb_utilization: lambda_b / (q.block_size as f64 * q.block_rate_bps),
        mean_confirmation_s: gb_mean_confirmation_time(lambda_b, q.block_rate_bps, q.block_size)
            .ok(),
        ledger: ledger_growth(v, q.block_size, delivered),
    }
}

/// Per-witness arrival rate and global share for one concrete deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentRates {
    pub witness_rate_tps: Vec<f64>,
    pub witness_global_share: Vec<f64>,
    pub lambda_b_tps: f64,
    pub delivered_tps: f64,
}

pub fn deployment_rates(
    cfg: &ScenarioConfig,
    dep: &Deployment,
    ps: &LinkSuccessMatrix,
    lambda: f64,
) -> Result<DeploymentRates, SelectionError> {
    let profiles = profiles_for(ps, cfg.traffic.retry_limit)?;
    let v = cfg.num_witnesses;
    let mut total = vec![0.0; v];
    let mut global = vec![0.0; v];
    for (i, prof) in profiles.iter().enumerate() {
        for w in 0..v {
            let r = lambda * prof.attempt_prob[w] * ps.get(i, w);
            total[w] += r;
            if !dep.is_local(i, w) {
                global[w] += r;
            }
        }
    }
    Ok(DeploymentRates {
        witness_global_share: total
            .iter()
            .zip(&global)
            .map(|(t, g)| if *t > 0.0 { g / t } else { 0.0 })
            .collect(),
        lambda_b_tps: global.iter().sum(),
        delivered_tps: total.iter().sum(),
        witness_rate_tps: total,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_symmetric_split() {
        let mut cfg = ScenarioConfig::with_witnesses(2);
        cfg.radio.sensitivity_w = 1e-30;
        cfg.deployment_replications = 3;
        let delta = mean_delivery_fraction(&cfg).unwrap();
        assert!((delta - 1.0).abs() < 1e-12);
        let a = analyze_symmetric(&cfg, 2e-3, delta);
        assert!((a.lambda_b_tps - 0.5).abs() < 1e-9);
        assert!((a.ledger.local_per_witness_tps - 0.25).abs() < 1e-9);
        assert!(a.mean_confirmation_s.unwrap() > 555.0);
    }

    #[test]
    fn deployment_rates_sum_to_delivered() {
        let mut cfg = ScenarioConfig::with_witnesses(4);
        cfg.num_devices = 60;
        let (dep, ps) = deployment_and_links(&cfg, 0);
        let r = deployment_rates(&cfg, &dep, &ps, 1e-2).unwrap();
        let delivered: f64 = ps
            .rows()
            .map(|row| 1e-2 * delivery_success_probability(row, 4).unwrap())
            .sum();
        assert!((r.delivered_tps - delivered).abs() < 1e-12);
        assert!(r
            .witness_global_share
            .iter()
            .all(|&s| (0.0..=1.0).contains(&s)));
    }
}
