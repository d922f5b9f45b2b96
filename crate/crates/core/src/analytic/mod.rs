//! Closed-form and numerically solved queueing results.
//!
//! * [`witness`]: each witness as an M/H2/1 queue (Pollaczek-Khinchine mean and
//!   the matrix-geometric stationary vector).
//! * [`blockchain`]: the global blockchain as a batch-service queue with
//!   exponential block generation time.
//! * [`capacity`]: stability-derived load bounds and ledger growth.

pub mod blockchain;
pub mod capacity;
pub mod linalg;
pub mod witness;

use thiserror::Error;

pub use blockchain::{
    gb_alpha, gb_arrival_rate, gb_mean_confirmation_time, gb_queue_stats, gb_stability,
    hazard_rate, BlockTime, ExponentialBlockTime, GbAlpha, GbQueueStats, GbStability,
};
pub use capacity::{ledger_growth, max_load_naive, max_load_wiblock, LedgerGrowth};
pub use witness::{
    mean_service_rate, service_variance_scv, witness_mean_queue, witness_queue_stats,
    witness_stationary, WitnessQueueStats, WitnessStationary,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("queue unstable: offered load {load} >= 1")]
    Unstable { load: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("{0}")]
    DomainError(String),
}
