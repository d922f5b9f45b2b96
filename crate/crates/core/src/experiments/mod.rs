//! Reproductions of the evaluation data sets, the analytic-vs-simulation
//! validation run and free parameter sweeps, written as CSV data files.

pub mod output;
pub mod scenario;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{
    gb_mean_confirmation_time, max_load_naive, max_load_wiblock, witness_mean_queue,
};
use crate::config::{emit_config, parse_raw, ConfigError, ScenarioConfig};
use crate::des::{self, replicate, DesError, SimResult};
use crate::radio::LinkSuccessMatrix;
use crate::selection::global_fraction;
use output::{fmt_num, fmt_opt, render_csv, sha256_hex, write_atomic};
pub use output::{render_tables, Metadata, Table};
use scenario::{
    analyze_symmetric, deployment_and_links, deployment_rates, mean_delivery_fraction,
    ScenarioError,
};

pub const FIG7A_POINTS: usize = 18;
pub const FIG7A_LOW: f64 = 0.10;
pub const FIG7A_HIGH: f64 = 0.95;
pub const FIG7A_WITNESSES: [usize; 3] = [2, 3, 4];
pub const FIG7B_HORIZON_S: f64 = 24.0 * 3600.0;
pub const FIG7B_BLOCK_SIZES: [usize; 5] = [250, 500, 1000, 2000, 4000];
pub const FIG6_HORIZON_S: f64 = 1.2e5;
pub const FIG7A_HORIZON_S: f64 = 1e6;
pub const VALIDATE_HORIZON_S: f64 = 2e7;
pub const VALIDATE_GB_UTILIZATION: f64 = 0.5;
/// Aggregate generation rate used when the base config has none.
pub const DEFAULT_AGGREGATE_TPS: f64 = 1.0;
pub const FIG7B_AGGREGATE_TPS: f64 = 0.4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentName {
    Fig5,
    Fig6,
    Fig7a,
    Fig7b,
    Validate,
    Sweep,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Fig5,
        ExperimentName::Fig6,
        ExperimentName::Fig7a,
        ExperimentName::Fig7b,
        ExperimentName::Validate,
        ExperimentName::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Fig5 => "fig5",
            ExperimentName::Fig6 => "fig6",
            ExperimentName::Fig7a => "fig7a",
            ExperimentName::Fig7b => "fig7b",
            ExperimentName::Validate => "validate",
            ExperimentName::Sweep => "sweep",
        }
    }

    /// The parameter this experiment sweeps, if it is fixed.
    pub fn sweep_param(self) -> Option<&'static str> {
        match self {
            ExperimentName::Fig5 | ExperimentName::Fig6 => Some("num_witnesses"),
            ExperimentName::Fig7a => Some("per_device_rate_tps"),
            ExperimentName::Fig7b => Some("block_size"),
            ExperimentName::Validate | ExperimentName::Sweep => None,
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| ExperimentError::InvalidSpec(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Engines {
    pub analytic: bool,
    pub des: bool,
}

impl Default for Engines {
    fn default() -> Self {
        Engines {
            analytic: true,
            des: false,
        }
    }
}

impl Engines {
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.analytic {
            out.push("analytic".to_string());
        }
        if self.des {
            out.push("des".to_string());
        }
        out
    }
}

impl FromStr for Engines {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut e = Engines {
            analytic: false,
            des: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "analytic" => e.analytic = true,
                "des" => e.des = true,
                other => {
                    return Err(ExperimentError::InvalidSpec(format!(
                        "unknown engine `{other}`"
                    )))
                }
            }
        }
        if !e.analytic && !e.des {
            return Err(ExperimentError::InvalidSpec("no engine selected".into()));
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub base: ScenarioConfig,
    pub sweep_axis: Option<SweepAxis>,
    pub output_dir: PathBuf,
    pub engines: Engines,
    pub seed: u64,
    /// Independent simulation replications per point; 1 uses batch means.
    pub reps: usize,
    pub horizon_s: Option<f64>,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, base: ScenarioConfig, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            name,
            base,
            sweep_axis: None,
            output_dir: output_dir.into(),
            engines: Engines::default(),
            seed: 0,
            reps: 1,
            horizon_s: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.base.validate()?;
        if self.reps == 0 {
            return Err(ExperimentError::InvalidSpec(
                "reps must be at least 1".into(),
            ));
        }
        if let Some(h) = self.horizon_s {
            if !(h.is_finite() && h > 0.0) {
                return Err(ExperimentError::InvalidSpec(format!(
                    "horizon {h} must be finite and > 0"
                )));
            }
        }
        match (&self.sweep_axis, self.name.sweep_param()) {
            (None, _) if self.name == ExperimentName::Sweep => {
                return Err(ExperimentError::InvalidSpec(
                    "sweep needs a parameter and values".into(),
                ))
            }
            (Some(axis), Some(fixed)) if axis.param != fixed => {
                return Err(ExperimentError::InvalidSpec(format!(
                    "{} sweeps `{fixed}`, not `{}`",
                    self.name, axis.param
                )))
            }
            (Some(_), None) if self.name == ExperimentName::Validate => {
                return Err(ExperimentError::InvalidSpec(
                    "validate takes no sweep axis".into(),
                ))
            }
            _ => {}
        }
        if let Some(axis) = &self.sweep_axis {
            if axis.values.is_empty() {
                return Err(ExperimentError::InvalidSpec(
                    "sweep axis has no values".into(),
                ));
            }
            for &x in &axis.values {
                with_param(&self.base, &axis.param, x)?;
            }
        }
        Ok(())
    }

    fn axis_values(&self, default: &[f64]) -> Vec<f64> {
        self.sweep_axis
            .as_ref()
            .map_or_else(|| default.to_vec(), |a| a.values.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub point: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    pub table: Table,
    pub failures: Vec<PointFailure>,
}

const INTEGER_KEYS: [&str; 6] = [
    "num_devices",
    "num_witnesses",
    "retry_limit",
    "block_size",
    "deployment_replications",
    "rng_seed",
];

/// `base` with one parameter replaced; the result is fully validated.
pub fn with_param(
    base: &ScenarioConfig,
    param: &str,
    value: f64,
) -> Result<ScenarioConfig, ConfigError> {
    let mut raw = parse_raw(&emit_config(base))?;
    let text = if INTEGER_KEYS.contains(&param) {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(ConfigError::InvariantViolation {
                field: param.to_string(),
                reason: format!("needs a non-negative integer, got {value}"),
            });
        }
        format!("{}", value as u64)
    } else {
        format!("{value:e}")
    };
    raw.set(param, &text)?;
    // A retry limit that tracked the witness count keeps tracking it.
    if param == "num_witnesses" && base.traffic.retry_limit == base.num_witnesses {
        raw.set("retry_limit", &text)?;
    }
    raw.resolve()
}

fn aggregate_default_rate(cfg: &ScenarioConfig, aggregate_tps: f64) -> f64 {
    cfg.traffic
        .per_device_rate_tps
        .unwrap_or(aggregate_tps / cfg.num_devices as f64)
}

fn lossless(cfg: &ScenarioConfig) -> LinkSuccessMatrix {
    LinkSuccessMatrix::uniform(cfg.num_devices, cfg.num_witnesses, 1.0)
}

type PointResult = Result<Vec<String>, String>;

fn err_string(e: impl fmt::Display) -> String {
    e.to_string()
}

/// Point estimate and half-width for one simulated quantity, either from a
/// single run's batch means or across replications.
fn sim_point<F, G>(
    spec: &ExperimentSpec,
    seed: u64,
    run: F,
    pick: G,
) -> Result<(f64, f64, SimResult), DesError>
where
    F: Fn(u64) -> Result<SimResult, DesError> + Sync,
    G: Fn(&SimResult) -> (f64, f64),
{
    if spec.reps >= 2 {
        let rep = replicate(spec.reps, seed, &run)?;
        let xs: Vec<f64> = rep.runs.iter().map(|r| pick(r).0).collect();
        let est = des::Estimate::from_samples(&xs);
        let first = rep.runs.into_iter().next().expect("at least two runs");
        Ok((est.mean, est.half_width, first))
    } else {
        let r = run(seed)?;
        let (m, hw) = pick(&r);
        Ok((m, hw, r))
    }
}

fn point_seed(base: u64, idx: usize) -> u64 {
    des::rng::splitmix64(base ^ ((idx as u64 + 1) << 32))
}

fn fig5(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let mut table = Table::new(&["v", "naive_tps", "wiblock_tps", "gain"]);
    let mut failures = Vec::new();
    let cfg = &spec.base;
    let (k, b, mu) = (
        cfg.num_devices,
        cfg.queue.block_size,
        cfg.queue.block_rate_bps,
    );
    for v in spec.axis_values(&(2..=10).map(f64::from).collect::<Vec<_>>()) {
        let v = v as usize;
        let naive: f64 = max_load_naive(k, b, mu);
        match max_load_wiblock(k, v, b, mu) {
            Ok(wi) => table.push(vec![
                v.to_string(),
                fmt_num(naive),
                fmt_num(wi),
                fmt_num(wi / naive),
            ]),
            Err(e) => failures.push(PointFailure {
                point: format!("v={v}"),
                error: e.to_string(),
            }),
        }
    }
    (table, failures)
}

fn fig6(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let mut cols = vec!["v", "fraction_gb", "fraction_witness", "fraction_gb_exact"];
    if spec.engines.des {
        cols.extend([
            "des_fraction_gb",
            "des_ci95",
            "des_delivered",
            "des_confirmed",
        ]);
    }
    let values = spec.axis_values(&(2..=10).map(f64::from).collect::<Vec<_>>());
    let horizon = spec.horizon_s.unwrap_or(FIG6_HORIZON_S);
    let rows: Vec<PointResult> = values
        .par_iter()
        .enumerate()
        .map(|(idx, &x)| {
            let cfg = with_param(&spec.base, "num_witnesses", x).map_err(err_string)?;
            let v = cfg.num_witnesses;
            let fraction_witness = 1.0 / v as f64;
            let fraction_gb = 1.0 - fraction_witness;
            let mut row = vec![
                v.to_string(),
                fmt_num(fraction_gb),
                fmt_num(fraction_witness),
                format!("{}/{v}", v - 1),
            ];
            if spec.engines.des {
                let lambda = aggregate_default_rate(&cfg, DEFAULT_AGGREGATE_TPS);
                let cfg = cfg.with_rate(lambda);
                let (dep, _) = deployment_and_links(&cfg, 0);
                let ps = lossless(&cfg);
                let run = |s| des::run_wiblock_sim(&cfg, &dep, &ps, horizon, s);
                let pick = |r: &SimResult| {
                    let n = (r.delivered_global_count + r.delivered_local_count) as f64;
                    let f = r.global_fraction(true);
                    (f, 1.96 * (f * (1.0 - f) / n).sqrt())
                };
                let (f, hw, r) =
                    sim_point(spec, point_seed(spec.seed, idx), run, pick).map_err(err_string)?;
                row.extend([
                    fmt_num(f),
                    fmt_num(hw),
                    (r.delivered_global_count + r.delivered_local_count).to_string(),
                    r.confirmed_count.to_string(),
                ]);
            }
            Ok(row)
        })
        .collect();
    collect_rows(&cols, &values, "v", rows)
}

fn collect_rows(
    cols: &[&str],
    values: &[f64],
    label: &str,
    rows: Vec<PointResult>,
) -> (Table, Vec<PointFailure>) {
    let mut table = Table::new(cols);
    let mut failures = Vec::new();
    for (x, row) in values.iter().zip(rows) {
        match row {
            Ok(r) => table.push(r),
            Err(error) => failures.push(PointFailure {
                point: format!("{label}={x}"),
                error,
            }),
        }
    }
    (table, failures)
}

#[derive(Debug, Clone, Copy)]
struct Fig7aPoint {
    curve: Option<usize>,
    lambda: f64,
    delta: f64,
    idx: usize,
}

fn fig7a(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let mut cols = vec![
        "curve",
        "v",
        "lambda_tps",
        "lambda_b_tps",
        "gb_utilization",
        "analytic_et_s",
    ];
    if spec.engines.des {
        cols.extend([
            "des_et_s",
            "des_ci95",
            "des_lambda_b_tps",
            "analytic_et_at_des_lambda_s",
        ]);
    }
    let base = &spec.base;
    let (k, b, mu) = (
        base.num_devices as f64,
        base.queue.block_size as f64,
        base.queue.block_rate_bps,
    );
    let mut failures = Vec::new();
    let mut points = Vec::new();
    let mut curves: Vec<(Option<usize>, f64)> = vec![(None, 1.0)];
    for v in FIG7A_WITNESSES {
        let cfg = match with_param(base, "num_witnesses", v as f64) {
            Ok(c) => c,
            Err(e) => {
                failures.push(PointFailure {
                    point: format!("v={v}"),
                    error: e.to_string(),
                });
                continue;
            }
        };
        match mean_delivery_fraction(&cfg) {
            Ok(delta) => curves.push((Some(v), delta)),
            Err(e) => failures.push(PointFailure {
                point: format!("v={v}"),
                error: e.to_string(),
            }),
        }
    }
    for (curve, delta) in curves {
        let share = curve.map_or(1.0, |v| delta * global_fraction::<f64>(v));
        let bound = b * mu / (k * share);
        let grid: Vec<f64> = match &spec.sweep_axis {
            Some(axis) => axis.values.clone(),
            None => (0..FIG7A_POINTS)
                .map(|i| {
                    bound
                        * (FIG7A_LOW
                            + (FIG7A_HIGH - FIG7A_LOW) * i as f64 / (FIG7A_POINTS - 1) as f64)
                })
                .collect(),
        };
        for lambda in grid {
            let idx = points.len();
            points.push(Fig7aPoint {
                curve,
                lambda,
                delta,
                idx,
            });
        }
    }
    let horizon = spec.horizon_s.unwrap_or(FIG7A_HORIZON_S);
    let rows: Vec<PointResult> = points
        .par_iter()
        .map(|pt| {
            let label = pt
                .curve
                .map_or("naive".to_string(), |v| format!("wiblock_v{v}"));
            let v = pt.curve.unwrap_or(base.num_witnesses);
            let cfg = with_param(base, "num_witnesses", v as f64)
                .map_err(err_string)?
                .with_rate(pt.lambda);
            let lambda_b = match pt.curve {
                None => k * pt.lambda,
                Some(_) => analyze_symmetric(&cfg, pt.lambda, pt.delta).lambda_b_tps,
            };
            let et = gb_mean_confirmation_time(lambda_b, mu, base.queue.block_size)
                .map_err(err_string)?;
            let mut row = vec![
                label,
                pt.curve.map_or(String::new(), |v| v.to_string()),
                fmt_num(pt.lambda),
                fmt_num(lambda_b),
                fmt_num(lambda_b / (b * mu)),
                fmt_num(et),
            ];
            if spec.engines.des {
                let seed = point_seed(spec.seed, pt.idx);
                let pick = |r: &SimResult| (r.mean_gb_sojourn_s, r.ci95.mean_gb_sojourn_s);
                let (m, hw, r) = match pt.curve {
                    None => sim_point(spec, seed, |s| des::run_naive_sim(&cfg, horizon, s), pick),
                    Some(_) => {
                        let (dep, ps) = deployment_and_links(&cfg, 0);
                        sim_point(
                            spec,
                            seed,
                            |s| des::run_wiblock_sim(&cfg, &dep, &ps, horizon, s),
                            pick,
                        )
                    }
                }
                .map_err(err_string)?;
                let at_des =
                    gb_mean_confirmation_time(r.gb_arrival_rate_tps, mu, base.queue.block_size)
                        .ok();
                row.extend([
                    fmt_num(m),
                    fmt_num(hw),
                    fmt_num(r.gb_arrival_rate_tps),
                    fmt_opt(at_des),
                ]);
            }
            Ok(row)
        })
        .collect();
    let values: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let (table, mut more) = collect_rows(&cols, &values, "lambda", rows);
    failures.append(&mut more);
    (table, failures)
}

fn fig7b(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let mut cols = vec![
        "b",
        "horizon_s",
        "analytic_naive_tx",
        "analytic_gb_tx",
        "analytic_local_tx_per_witness",
        "analytic_gb_blocks",
    ];
    if spec.engines.des {
        cols.extend([
            "des_naive_tx",
            "des_gb_tx",
            "des_local_tx_w0",
            "des_local_tx_w1",
            "des_gb_blocks",
            "des_gb_ratio",
            "des_local_ratio_w0",
            "des_local_ratio_w1",
        ]);
    }
    let horizon = spec.horizon_s.unwrap_or(FIG7B_HORIZON_S);
    let values = spec.axis_values(&FIG7B_BLOCK_SIZES.map(|b| b as f64));
    let rows: Vec<PointResult> = values
        .par_iter()
        .enumerate()
        .map(|(idx, &x)| {
            let cfg = with_param(&spec.base, "num_witnesses", 2.0)
                .and_then(|c| with_param(&c, "block_size", x))
                .map_err(err_string)?;
            let lambda = aggregate_default_rate(&cfg, FIG7B_AGGREGATE_TPS);
            let cfg = cfg.with_rate(lambda);
            let offered = cfg.num_devices as f64 * lambda;
            let g = crate::analytic::ledger_growth(2, cfg.queue.block_size, offered);
            let mut row = vec![
                cfg.queue.block_size.to_string(),
                fmt_num(horizon),
                fmt_num(g.naive_tps * horizon),
                fmt_num(g.gb_tps * horizon),
                fmt_num(g.local_per_witness_tps * horizon),
                fmt_num(g.gb_blocks_per_s * horizon),
            ];
            if spec.engines.des {
                let seed = point_seed(spec.seed, idx);
                let (dep, _) = deployment_and_links(&cfg, 0);
                let ps = lossless(&cfg);
                let naive = des::run_naive_sim(&cfg, horizon, seed).map_err(err_string)?;
                let wi =
                    des::run_wiblock_sim(&cfg, &dep, &ps, horizon, seed).map_err(err_string)?;
                let n = naive.ledger_tx_counts.gb as f64;
                let local = &wi.ledger_tx_counts.local;
                row.extend([
                    naive.ledger_tx_counts.gb.to_string(),
                    wi.ledger_tx_counts.gb.to_string(),
                    local[0].to_string(),
                    local[1].to_string(),
                    wi.block_count.to_string(),
                    fmt_num(wi.ledger_tx_counts.gb as f64 / n),
                    fmt_num(local[0] as f64 / n),
                    fmt_num(local[1] as f64 / n),
                ]);
            }
            Ok(row)
        })
        .collect();
    collect_rows(&cols, &values, "b", rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub des: f64,
    pub des_ci95: f64,
    pub rel_err: f64,
    pub tolerance: String,
    pub pass: bool,
}

fn relative(quantity: String, analytic: f64, des: f64, ci: f64, tol: f64) -> Comparison {
    let rel_err = (des - analytic).abs() / analytic.abs();
    Comparison {
        quantity,
        analytic,
        des,
        des_ci95: ci,
        rel_err,
        tolerance: format!("rel {tol}"),
        pass: rel_err <= tol,
    }
}

fn within_ci(quantity: String, analytic: f64, des: f64, ci: f64) -> Comparison {
    Comparison {
        quantity,
        analytic,
        des,
        des_ci95: ci,
        rel_err: (des - analytic).abs() / analytic.abs(),
        tolerance: "ci95".into(),
        pass: (des - analytic).abs() <= ci,
    }
}

/// Analytic predictions for one deployment against one simulation of it.
pub fn validation_comparisons(spec: &ExperimentSpec) -> Result<Vec<Comparison>, ScenarioError> {
    let base = &spec.base;
    let (dep, ps) = deployment_and_links(base, 0);
    let unit = deployment_rates(base, &dep, &ps, 1.0)?;
    let q = &base.queue;
    let lambda = base.traffic.per_device_rate_tps.unwrap_or(
        VALIDATE_GB_UTILIZATION * q.block_size as f64 * q.block_rate_bps / unit.lambda_b_tps,
    );
    let cfg = base.clone().with_rate(lambda);
    let rates = deployment_rates(&cfg, &dep, &ps, lambda)?;
    let horizon = spec.horizon_s.unwrap_or(VALIDATE_HORIZON_S);
    let r = des::run_wiblock_sim(&cfg, &dep, &ps, horizon, spec.seed)
        .map_err(|e| crate::analytic::AnalyticError::DomainError(e.to_string()))?;

    let mut out = Vec::new();
    let et = gb_mean_confirmation_time(rates.lambda_b_tps, q.block_rate_bps, q.block_size)?;
    out.push(relative(
        "gb_mean_confirmation_s".into(),
        et,
        r.mean_gb_sojourn_s,
        r.ci95.mean_gb_sojourn_s,
        0.05,
    ));
    for w in 0..cfg.num_witnesses {
        let stats = witness_mean_queue(
            rates.witness_rate_tps[w],
            rates.witness_global_share[w],
            q.mu1_tps,
            q.mu2_tps,
        )?;
        out.push(relative(
            format!("witness_queue_len[{w}]"),
            stats.mean_in_system,
            r.mean_witness_queue_len[w],
            r.ci95.mean_witness_queue_len[w],
            0.05,
        ));
    }
    let delivered = (r.delivered_global_count + r.delivered_local_count) as f64;
    let share = rates.lambda_b_tps / rates.delivered_tps;
    let f = r.global_fraction(true);
    out.push(within_ci(
        "global_fraction".into(),
        share,
        f,
        1.96 * (share * (1.0 - share) / delivered).sqrt(),
    ));
    let delivery = rates.delivered_tps / (lambda * cfg.num_devices as f64);
    let n = r.generated_count as f64;
    out.push(within_ci(
        "delivery_fraction".into(),
        delivery,
        delivered / n,
        1.96 * (delivery * (1.0 - delivery) / n).sqrt(),
    ));
    out.push(relative(
        "gb_littles_law".into(),
        r.gb_arrival_rate_tps * r.mean_gb_sojourn_s,
        r.gb_mean_queue_len,
        r.ci95.gb_mean_queue_len,
        0.03,
    ));
    for w in 0..cfg.num_witnesses {
        out.push(relative(
            format!("witness_littles_law[{w}]"),
            r.witness_arrival_rate_tps[w] * r.witness_sojourn_s[w],
            r.mean_witness_queue_len[w],
            r.ci95.mean_witness_queue_len[w],
            0.03,
        ));
    }
    let conserved = r.confirmed_count + r.dropped_count + r.in_flight_count == r.generated_count
        && r.ledger_tx_counts.gb == r.global_count;
    out.push(Comparison {
        quantity: "conservation".into(),
        analytic: r.generated_count as f64,
        des: (r.confirmed_count + r.dropped_count + r.in_flight_count) as f64,
        des_ci95: 0.0,
        rel_err: 0.0,
        tolerance: "exact".into(),
        pass: conserved,
    });
    Ok(out)
}

fn validate(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let mut table = Table::new(&[
        "quantity",
        "analytic",
        "des",
        "des_ci95",
        "rel_err",
        "tolerance",
        "pass",
    ]);
    let mut failures = Vec::new();
    match validation_comparisons(spec) {
        Ok(rows) => {
            for c in rows {
                if !c.pass {
                    failures.push(PointFailure {
                        point: c.quantity.clone(),
                        error: format!(
                            "analytic {} vs simulated {} ({})",
                            c.analytic, c.des, c.tolerance
                        ),
                    });
                }
                table.push(vec![
                    c.quantity,
                    fmt_num(c.analytic),
                    fmt_num(c.des),
                    fmt_num(c.des_ci95),
                    fmt_num(c.rel_err),
                    c.tolerance,
                    c.pass.to_string(),
                ]);
            }
        }
        Err(e) => failures.push(PointFailure {
            point: "validate".into(),
            error: e.to_string(),
        }),
    }
    (table, failures)
}

fn sweep(spec: &ExperimentSpec) -> (Table, Vec<PointFailure>) {
    let axis = spec.sweep_axis.as_ref().expect("validated sweep axis");
    let mut cols = vec![
        axis.param.as_str(),
        "v",
        "lambda_tps",
        "delivery_fraction",
        "lambda_b_tps",
        "gb_utilization",
        "analytic_et_s",
        "witness_queue_len",
        "witness_sojourn_s",
        "gb_ledger_tps",
        "local_ledger_tps_per_witness",
    ];
    if spec.engines.des {
        cols.extend(["des_et_s", "des_ci95", "des_witness_queue_len"]);
    }
    let horizon = spec.horizon_s.unwrap_or(FIG7A_HORIZON_S);
    let rows: Vec<PointResult> = axis
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, &x)| {
            let cfg = with_param(&spec.base, &axis.param, x).map_err(err_string)?;
            let lambda = cfg.rate().map_err(err_string)?;
            let delta = mean_delivery_fraction(&cfg).map_err(err_string)?;
            let a = analyze_symmetric(&cfg, lambda, delta);
            let mut row = vec![
                fmt_num(x),
                cfg.num_witnesses.to_string(),
                fmt_num(lambda),
                fmt_num(delta),
                fmt_num(a.lambda_b_tps),
                fmt_num(a.gb_utilization),
                fmt_opt(a.mean_confirmation_s),
                fmt_opt(a.witness.as_ref().map(|w| w.mean_in_system)),
                fmt_opt(a.witness.as_ref().map(|w| w.mean_sojourn())),
                fmt_num(a.ledger.gb_tps),
                fmt_num(a.ledger.local_per_witness_tps),
            ];
            if spec.engines.des {
                let (dep, ps) = deployment_and_links(&cfg, 0);
                let run = |s| des::run_wiblock_sim(&cfg, &dep, &ps, horizon, s);
                let pick = |r: &SimResult| (r.mean_gb_sojourn_s, r.ci95.mean_gb_sojourn_s);
                let (m, hw, r) =
                    sim_point(spec, point_seed(spec.seed, idx), run, pick).map_err(err_string)?;
                let wl = r.mean_witness_queue_len.iter().sum::<f64>()
                    / r.mean_witness_queue_len.len() as f64;
                row.extend([fmt_num(m), fmt_num(hw), fmt_num(wl)]);
            }
            Ok(row)
        })
        .collect();
    collect_rows(&cols, &axis.values, &axis.param, rows)
}

/// Runs one experiment and writes `<name>.csv` and `<name>.config` into the
/// output directory. Failed points are reported, the rest still written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, ExperimentError> {
    spec.validate()?;
    let (table, failures) = match spec.name {
        ExperimentName::Fig5 => fig5(spec),
        ExperimentName::Fig6 => fig6(spec),
        ExperimentName::Fig7a => fig7a(spec),
        ExperimentName::Fig7b => fig7b(spec),
        ExperimentName::Validate => validate(spec),
        ExperimentName::Sweep => sweep(spec),
    };
    fs::create_dir_all(&spec.output_dir)?;
    let config_text = emit_config(&spec.base);
    let meta = Metadata {
        experiment: spec.name.to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        seed: spec.seed,
        engines: if spec.name == ExperimentName::Validate {
            vec!["analytic".into(), "des".into()]
        } else {
            spec.engines.names()
        },
        reps: spec.reps,
        horizon_s: spec.horizon_s,
        sweep_param: spec
            .sweep_axis
            .as_ref()
            .map(|a| a.param.clone())
            .or(spec.name.sweep_param().map(str::to_string)),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let csv_path = spec.output_dir.join(format!("{}.csv", spec.name));
    let cfg_path = spec.output_dir.join(format!("{}.config", spec.name));
    write_atomic(&cfg_path, &format!("# seed = {}\n{config_text}", spec.seed))?;
    write_atomic(&csv_path, &render_csv(&meta, &table))?;
    Ok(ExperimentReport {
        files: vec![csv_path, cfg_path],
        table,
        failures,
    })
}

pub fn output_files(dir: &Path, name: ExperimentName) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}.config")),
    )
}
