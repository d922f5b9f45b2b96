//! Load bounds from GB stability and ledger growth rates.

use serde::{Deserialize, Serialize};

use super::AnalyticError;
use crate::config::ScenarioConfig;
use crate::scalar::Scalar;
use crate::selection::global_fraction;

/// `b μ_B / k`: every generated transaction goes to the GB.
pub fn max_load_naive<T: Scalar>(k: usize, b: usize, mu_b: T) -> T {
    T::from_count(b) * mu_b / T::from_count(k)
}

/// `b μ_B v / (k (v - 1))`: only the global share reaches the GB.
pub fn max_load_wiblock<T: Scalar>(
    k: usize,
    v: usize,
    b: usize,
    mu_b: T,
) -> Result<T, AnalyticError> {
    if v < 2 {
        return Err(AnalyticError::DomainError(format!(
            "load bound needs at least two witnesses (got {v})"
        )));
    }
    Ok(max_load_naive(k, b, mu_b) * T::from_count(v) / T::from_count(v - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerGrowth<T> {
    pub naive_tps: T,
    pub gb_tps: T,
    pub local_per_witness_tps: T,
    pub gb_blocks_per_s: T,
}

pub fn ledger_growth<T: Scalar>(v: usize, b: usize, delivered_rate: T) -> LedgerGrowth<T> {
    let p: T = global_fraction(v);
    let gb_tps = p * delivered_rate;
    LedgerGrowth {
        naive_tps: delivered_rate,
        gb_tps,
        local_per_witness_tps: (delivered_rate - gb_tps) / T::from_count(v),
        gb_blocks_per_s: gb_tps / T::from_count(b),
    }
}

pub fn ledger_growth_for(cfg: &ScenarioConfig, delivered_rate: f64) -> LedgerGrowth<f64> {
    ledger_growth(cfg.num_witnesses, cfg.queue.block_size, delivered_rate)
}
