//! Discrete-event simulation of transaction generation, retry-based delivery,
//! witness queues and block production.
//!
//! A run is strictly sequential and fully determined by its seed. Statistics
//! are collected after a warm-up that lasts at least a tenth of the horizon
//! and until a thousand transactions have been confirmed. Counters, ledger
//! totals included, cover the whole horizon.

mod engine;
pub mod event;
pub mod replicate;
pub mod rng;
pub mod stats;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::radio::{Deployment, LinkSuccessMatrix};
use engine::{Engine, EngineSpec, Routing};

pub use engine::{WARMUP_CONFIRMATIONS, WARMUP_FRACTION};
pub use event::{EventKind, EventQueue, Payload, SimEvent};
pub use replicate::{replicate, Estimate, Metrics, Replicated};

pub const SIM_RESULT_SCHEMA_VERSION: u32 = 1;
/// Fewer expected confirmations than this triggers a warning.
pub const MIN_EXPECTED_CONFIRMATIONS: f64 = 1e4;

#[derive(Debug, Error)]
pub enum DesError {
    #[error("invalid horizon {0}: must be finite and > 0")]
    InvalidHorizon(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    DomainError(String),
    #[error("trace output failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerCounts {
    pub gb: u64,
    pub local: Vec<u64>,
}

/// 95% batch-means half-widths for every reported mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ci95 {
    pub mean_witness_sojourn_s: f64,
    pub witness_sojourn_s: Vec<f64>,
    pub mean_witness_queue_len: Vec<f64>,
    pub mean_gb_sojourn_s: f64,
    pub gb_mean_queue_len: f64,
    pub gb_mean_waiting_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub schema_version: u32,
    pub horizon_s: f64,
    pub seed: u64,
    /// End of the warm-up; `warmup_complete` is false if it never ended and
    /// the means then cover the whole run.
    pub warmup_s: f64,
    pub warmup_complete: bool,
    pub generated_count: u64,
    pub confirmed_count: u64,
    pub dropped_count: u64,
    pub in_flight_count: u64,
    pub global_count: u64,
    pub local_count: u64,
    pub delivered_global_count: u64,
    pub delivered_local_count: u64,
    pub witness_service_count: u64,
    /// Services drawn at the global service rate.
    pub global_service_count: u64,
    pub mean_witness_sojourn_s: f64,
    pub witness_sojourn_s: Vec<f64>,
    pub mean_witness_queue_len: Vec<f64>,
    pub witness_arrival_rate_tps: Vec<f64>,
    pub mean_gb_sojourn_s: f64,
    pub gb_sojourn_samples: u64,
    /// Pending transactions, including those that fit in the block being mined.
    pub gb_mean_queue_len: f64,
    /// Pending transactions beyond one block's capacity.
    pub gb_mean_waiting_len: f64,
    pub gb_arrival_rate_tps: f64,
    pub ledger_tx_counts: LedgerCounts,
    /// Non-empty blocks.
    pub block_count: u64,
    pub ci95: Ci95,
    pub unstable: bool,
    pub warnings: Vec<String>,
}

impl SimResult {
    /// Confirmed global transactions over all confirmed, or over all delivered
    /// when `delivered` is set.
    pub fn global_fraction(&self, delivered: bool) -> f64 {
        let (g, l) = if delivered {
            (self.delivered_global_count, self.delivered_local_count)
        } else {
            (self.global_count, self.local_count)
        };
        g as f64 / (g + l) as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sim result serializes")
    }
}

/// Single M/H2/1 witness queue fed by a Poisson stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessQueueSim {
    pub horizon_s: f64,
    pub seed: u64,
    pub warmup_s: f64,
    pub arrival_rate_tps: f64,
    pub mean_queue_len: f64,
    pub queue_len_half_width: f64,
    pub mean_sojourn_s: f64,
    pub sojourn_half_width: f64,
    pub served_count: u64,
    pub global_service_fraction: f64,
    pub unstable: bool,
}

fn check_horizon(horizon_s: f64) -> Result<(), DesError> {
    if horizon_s.is_finite() && horizon_s > 0.0 {
        Ok(())
    } else {
        Err(DesError::InvalidHorizon(horizon_s))
    }
}

fn expected_warning(expected: f64) -> Vec<String> {
    if expected < MIN_EXPECTED_CONFIRMATIONS {
        vec![format!(
            "horizon yields about {expected:.0} confirmations, fewer than {MIN_EXPECTED_CONFIRMATIONS:.0}"
        )]
    } else {
        Vec::new()
    }
}

fn assemble(o: engine::Outcome, horizon_s: f64, seed: u64, mut warnings: Vec<String>) -> SimResult {
    if !o.warmup_complete && o.generated > 0 {
        warnings.push(format!(
            "warm-up never completed ({WARMUP_CONFIRMATIONS} confirmations not reached); means cover the whole run"
        ));
    }
    if o.unstable {
        warnings.push(
            "queue length grows over the measurement window; statistics are not steady-state"
                .into(),
        );
    }
    let confirmed = o.confirmed_global + o.confirmed_local;
    SimResult {
        schema_version: SIM_RESULT_SCHEMA_VERSION,
        horizon_s,
        seed,
        warmup_s: o.warmup_s,
        warmup_complete: o.warmup_complete,
        generated_count: o.generated,
        confirmed_count: confirmed,
        dropped_count: o.dropped,
        in_flight_count: o.in_witnesses + o.in_gb,
        global_count: o.confirmed_global,
        local_count: o.confirmed_local,
        delivered_global_count: o.delivered_global,
        delivered_local_count: o.delivered_local,
        witness_service_count: o.witness_services,
        global_service_count: o.witness_global_services,
        mean_witness_sojourn_s: o.witness_sojourn_all.0,
        witness_sojourn_s: o.witness_sojourn.iter().map(|s| s.0).collect(),
        mean_witness_queue_len: o.witness_queue.iter().map(|s| s.0).collect(),
        witness_arrival_rate_tps: o.witness_arrival_rate,
        mean_gb_sojourn_s: o.gb_sojourn.0,
        gb_sojourn_samples: o.gb_sojourn_samples,
        gb_mean_queue_len: o.gb_queue.0,
        gb_mean_waiting_len: o.gb_beyond_block.0,
        gb_arrival_rate_tps: o.gb_arrival_rate,
        ledger_tx_counts: LedgerCounts {
            gb: o.gb_ledger,
            local: o.local_ledgers,
        },
        block_count: o.blocks,
        ci95: Ci95 {
            mean_witness_sojourn_s: o.witness_sojourn_all.1,
            witness_sojourn_s: o.witness_sojourn.iter().map(|s| s.1).collect(),
            mean_witness_queue_len: o.witness_queue.iter().map(|s| s.1).collect(),
            mean_gb_sojourn_s: o.gb_sojourn.1,
            gb_mean_queue_len: o.gb_queue.1,
            gb_mean_waiting_len: o.gb_beyond_block.1,
        },
        unstable: o.unstable,
        warnings,
    }
}

fn check_links(
    cfg: &ScenarioConfig,
    dep: &Deployment,
    ps: &LinkSuccessMatrix,
) -> Result<(), DesError> {
    if dep.num_devices() != cfg.num_devices || dep.num_witnesses() != cfg.num_witnesses {
        return Err(DesError::DomainError(format!(
            "deployment has {}x{} devices/witnesses, config asks for {}x{}",
            dep.num_devices(),
            dep.num_witnesses(),
            cfg.num_devices,
            cfg.num_witnesses
        )));
    }
    if ps.num_devices() != dep.num_devices() || ps.num_witnesses() != dep.num_witnesses() {
        return Err(DesError::DomainError(
            "link matrix does not match deployment".into(),
        ));
    }
    Ok(())
}

/// Full pipeline; see the module docs for what is measured.
pub fn run_wiblock_sim(
    cfg: &ScenarioConfig,
    dep: &Deployment,
    ps: &LinkSuccessMatrix,
    horizon_s: f64,
    seed: u64,
) -> Result<SimResult, DesError> {
    run_wiblock_sim_traced(cfg, dep, ps, horizon_s, seed, None)
}

/// [`run_wiblock_sim`] that also writes one CSV row per event to `trace`.
pub fn run_wiblock_sim_traced(
    cfg: &ScenarioConfig,
    dep: &Deployment,
    ps: &LinkSuccessMatrix,
    horizon_s: f64,
    seed: u64,
    trace: Option<&mut dyn Write>,
) -> Result<SimResult, DesError> {
    check_horizon(horizon_s)?;
    cfg.validate()?;
    check_links(cfg, dep, ps)?;
    let lambda = cfg.rate()?;
    let q = &cfg.queue;
    let spec = EngineSpec {
        routing: Routing::Wiblock {
            dep,
            ps,
            retry_limit: cfg.traffic.retry_limit,
        },
        arrival_rate: lambda * cfg.num_devices as f64,
        mu_global: q.mu1_tps,
        mu_local: q.mu2_tps,
        gb: Some((q.block_size, q.block_rate_bps)),
        horizon: horizon_s,
        seed,
    };
    let warnings = expected_warning(spec.arrival_rate * horizon_s);
    let outcome = Engine::new(spec, trace).run()?;
    Ok(assemble(outcome, horizon_s, seed, warnings))
}

/// Benchmark without witnesses: all `kλ` transactions go to the GB.
pub fn run_naive_sim(
    cfg: &ScenarioConfig,
    horizon_s: f64,
    seed: u64,
) -> Result<SimResult, DesError> {
    check_horizon(horizon_s)?;
    cfg.validate()?;
    let lambda = cfg.rate()?;
    let q = &cfg.queue;
    let spec = EngineSpec {
        routing: Routing::Naive {
            num_devices: cfg.num_devices,
        },
        arrival_rate: lambda * cfg.num_devices as f64,
        mu_global: q.mu1_tps,
        mu_local: q.mu2_tps,
        gb: Some((q.block_size, q.block_rate_bps)),
        horizon: horizon_s,
        seed,
    };
    let warnings = expected_warning(spec.arrival_rate * horizon_s);
    let outcome = Engine::new(spec, None).run()?;
    Ok(assemble(outcome, horizon_s, seed, warnings))
}

/// Batch-service queue alone with Poisson input of rate `lambda_b`.
pub fn run_gb_sim(
    lambda_b: f64,
    block_rate: f64,
    block_size: usize,
    horizon_s: f64,
    seed: u64,
) -> Result<SimResult, DesError> {
    check_horizon(horizon_s)?;
    if !(lambda_b >= 0.0 && block_rate > 0.0 && block_size > 0) {
        return Err(DesError::DomainError(
            "rates must be non-negative and block size positive".into(),
        ));
    }
    let spec = EngineSpec {
        routing: Routing::Naive { num_devices: 1 },
        arrival_rate: lambda_b,
        mu_global: 1.0,
        mu_local: 1.0,
        gb: Some((block_size, block_rate)),
        horizon: horizon_s,
        seed,
    };
    let warnings = expected_warning(lambda_b * horizon_s);
    let outcome = Engine::new(spec, None).run()?;
    Ok(assemble(outcome, horizon_s, seed, warnings))
}

/// One witness with Poisson arrivals of rate `lambda_w`; each service is
/// global (rate `mu1`) with probability `p`, otherwise local (rate `mu2`).
pub fn run_witness_queue_sim(
    lambda_w: f64,
    p: f64,
    mu1: f64,
    mu2: f64,
    horizon_s: f64,
    seed: u64,
) -> Result<WitnessQueueSim, DesError> {
    check_horizon(horizon_s)?;
    if !(lambda_w >= 0.0 && (0.0..=1.0).contains(&p) && mu1 > 0.0 && mu2 > 0.0) {
        return Err(DesError::DomainError(
            "invalid witness queue parameters".into(),
        ));
    }
    let spec = EngineSpec {
        routing: Routing::WitnessOnly { global_prob: p },
        arrival_rate: lambda_w,
        mu_global: mu1,
        mu_local: mu2,
        gb: None,
        horizon: horizon_s,
        seed,
    };
    let o = Engine::new(spec, None).run()?;
    Ok(WitnessQueueSim {
        horizon_s,
        seed,
        warmup_s: o.warmup_s,
        arrival_rate_tps: o.witness_arrival_rate[0],
        mean_queue_len: o.witness_queue[0].0,
        queue_len_half_width: o.witness_queue[0].1,
        mean_sojourn_s: o.witness_sojourn[0].0,
        sojourn_half_width: o.witness_sojourn[0].1,
        served_count: o.witness_departures,
        global_service_fraction: o.witness_global_services as f64
            / o.witness_services.max(1) as f64,
        unstable: o.unstable,
    })
}
