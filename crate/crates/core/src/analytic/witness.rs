//! Witness tier: M/H2/1 queue with global (rate `mu1`, probability `p`) and
//! local (rate `mu2`) service phases, FCFS, phase fixed at service start.

use serde::{Deserialize, Serialize};

use super::linalg::{Mat2, Row2};
use super::AnalyticError;
use crate::scalar::{Real, Scalar};

/// Successive-iterate tolerance for the rate matrix.
pub const RATE_MATRIX_TOL: f64 = 1e-12;
pub const RATE_MATRIX_MAX_ITER: usize = 10_000_000;
/// Hard cap on the length of a truncated stationary vector.
pub const MAX_STATIONARY_LEN: usize = 50_000_000;

/// `(p/mu1 + (1-p)/mu2)^-1`.
pub fn mean_service_rate<T: Scalar>(p: T, mu1: T, mu2: T) -> T {
    T::one() / (p / mu1 + (T::one() - p) / mu2)
}

/// Service-time variance and squared coefficient of variation.
pub fn service_variance_scv<T: Scalar>(p: T, mu1: T, mu2: T) -> (T, T) {
    let mu = mean_service_rate(p, mu1, mu2);
    let second_moment = T::two() * (p / (mu1 * mu1) + (T::one() - p) / (mu2 * mu2));
    let variance = second_moment - T::one() / (mu * mu);
    (variance, mu * mu * variance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessQueueStats<T> {
    pub lambda_w: T,
    pub mu_mean: T,
    pub rho: T,
    pub sigma2: T,
    pub scv: T,
    /// Mean number of transactions at the witness.
    #[serde(rename = "L")]
    pub mean_in_system: T,
    #[serde(rename = "L_g")]
    pub mean_global: T,
    #[serde(rename = "L_l")]
    pub mean_local: T,
    /// `τ_0, τ_1, ...` up to truncation; empty unless requested.
    pub stationary_prefix: Vec<T>,
}

impl<T: Scalar> WitnessQueueStats<T> {
    /// Mean sojourn at the witness by Little's law.
    pub fn mean_sojourn(&self) -> T {
        self.mean_in_system / self.lambda_w
    }
}

fn unstable<T: Scalar + num_traits::ToPrimitive>(rho: T) -> AnalyticError {
    AnalyticError::Unstable {
        load: rho.to_f64().unwrap_or(f64::INFINITY),
    }
}

/// Pollaczek-Khinchine mean occupancy split by transaction class.
pub fn witness_mean_queue<T>(
    lambda_w: T,
    p: T,
    mu1: T,
    mu2: T,
) -> Result<WitnessQueueStats<T>, AnalyticError>
where
    T: Scalar + num_traits::ToPrimitive,
{
    let mu = mean_service_rate(p, mu1, mu2);
    let rho = lambda_w / mu;
    if rho >= T::one() {
        return Err(unstable(rho));
    }
    let (sigma2, scv) = service_variance_scv(p, mu1, mu2);
    let l = rho + (T::one() + scv) / T::two() * rho * rho / (T::one() - rho);
    let mean_global = p * l;
    Ok(WitnessQueueStats {
        lambda_w,
        mu_mean: mu,
        rho,
        sigma2,
        scv,
        mean_in_system: l,
        mean_global,
        mean_local: l - mean_global,
        stationary_prefix: Vec::new(),
    })
}

/// Stationary law of the M/H2/1 level process from the matrix-geometric
/// method: `π_m = π_1 R^{m-1}` for `m >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessStationary<T> {
    /// Minimal non-negative solution of `A0 + R A1 + R² A2 = 0`.
    pub rate_matrix: Mat2<T>,
    pub empty_prob: T,
    /// Phase-resolved probabilities of level 1.
    pub level_one: Row2<T>,
    /// `τ_m`, aggregated over phases, truncated once the tail drops below tolerance.
    pub tau: Vec<T>,
    /// Exact probability mass beyond the truncation point.
    pub tail_mass: T,
    pub iterations: usize,
}

impl<T: Real> WitnessStationary<T> {
    /// `Σ m τ_m` over the retained prefix.
    pub fn truncated_mean(&self) -> T {
        self.tau
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (m, &t)| acc + T::from_count(m) * t)
    }

    /// `Σ_{m>=1} m π_1 R^{m-1} 1 = π_1 (I - R)^{-2} 1`, with no truncation.
    pub fn mean_in_system(&self) -> T {
        let n = (Mat2::identity() - self.rate_matrix)
            .inverse()
            .expect("spectral radius of R below one");
        (self.level_one * (n * n)).sum()
    }
}

struct QbdBlocks<T> {
    up: Mat2<T>,
    local: Mat2<T>,
    down: Mat2<T>,
    exit: [T; 2],
    entry: Row2<T>,
}

fn qbd_blocks<T: Real>(lambda: T, p: T, mu1: T, mu2: T) -> QbdBlocks<T> {
    let q = T::one() - p;
    QbdBlocks {
        up: Mat2::diag(lambda, lambda),
        local: Mat2::diag(-(lambda + mu1), -(lambda + mu2)),
        // Completion in phase n, then the next transaction draws its phase.
        down: Mat2::new(mu1 * p, mu1 * q, mu2 * p, mu2 * q),
        exit: [mu1, mu2],
        entry: Row2([lambda * p, lambda * q]),
    }
}

fn solve_rate_matrix<T: Real>(blocks: &QbdBlocks<T>) -> Result<(Mat2<T>, usize), AnalyticError> {
    let tol = T::lit(RATE_MATRIX_TOL);
    let mut r = Mat2::zero();
    let mut diff = T::infinity();
    for it in 1..=RATE_MATRIX_MAX_ITER {
        // R <- A0 (-A1 - R A2)^{-1}
        let inner = -(blocks.local + r * blocks.down);
        let next = blocks.up
            * inner.inverse().ok_or(AnalyticError::NonConvergence {
                iterations: it,
                residual: f64::NAN,
            })?;
        diff = (next - r).max_abs();
        r = next;
        if diff < tol {
            return Ok((r, it));
        }
    }
    Err(AnalyticError::NonConvergence {
        iterations: RATE_MATRIX_MAX_ITER,
        residual: diff.as_f64(),
    })
}

pub fn witness_stationary<T: Real>(
    lambda_w: T,
    p: T,
    mu1: T,
    mu2: T,
    tol: T,
) -> Result<WitnessStationary<T>, AnalyticError> {
    if !(tol > T::zero()) {
        return Err(AnalyticError::DomainError(
            "truncation tolerance must be positive".into(),
        ));
    }
    let rho = lambda_w / mean_service_rate(p, mu1, mu2);
    if rho >= T::one() {
        return Err(unstable(rho));
    }
    if lambda_w == T::zero() {
        return Ok(WitnessStationary {
            rate_matrix: Mat2::zero(),
            empty_prob: T::one(),
            level_one: Row2([T::zero(), T::zero()]),
            tau: vec![T::one()],
            tail_mass: T::zero(),
            iterations: 0,
        });
    }

    let blocks = qbd_blocks(lambda_w, p, mu1, mu2);
    let (r, iterations) = solve_rate_matrix(&blocks)?;

    // Boundary: π_0 λ α + π_1 (A1 + R A2) = 0 with π_0 = 1, then normalize.
    let boundary = blocks.local + r * blocks.down;
    let boundary_inv = boundary.inverse().ok_or(AnalyticError::NonConvergence {
        iterations,
        residual: f64::NAN,
    })?;
    let unnormalized = (blocks.entry * boundary_inv).scale(-T::one());
    let geometric_sum = (Mat2::identity() - r)
        .inverse()
        .ok_or(AnalyticError::NonConvergence {
            iterations,
            residual: f64::NAN,
        })?;
    let busy_mass = (unnormalized * geometric_sum).sum();
    let norm = T::one() + busy_mass;
    let empty_prob = T::one() / norm;
    let level_one = unnormalized.scale(empty_prob);

    // Sanity: level 0 balance, λ π_0 = π_1 · exit.
    debug_assert!({
        let flow = level_one.0[0] * blocks.exit[0] + level_one.0[1] * blocks.exit[1];
        (flow - lambda_w * empty_prob).abs()
            <= T::lit(1e-8).max(T::epsilon().sqrt()) * lambda_w.max(T::one())
    });

    let mut tau = vec![empty_prob];
    let mut level = level_one;
    let mut tail_mass = (level * geometric_sum).sum();
    while tail_mass >= tol {
        if tau.len() >= MAX_STATIONARY_LEN {
            return Err(AnalyticError::NonConvergence {
                iterations: tau.len(),
                residual: tail_mass.as_f64(),
            });
        }
        tau.push(level.sum());
        level = level * r;
        tail_mass = (level * geometric_sum).sum();
    }
    Ok(WitnessStationary {
        rate_matrix: r,
        empty_prob,
        level_one,
        tau,
        tail_mass: tail_mass.max(T::zero()),
        iterations,
    })
}

/// P-K statistics with the truncated stationary vector attached.
pub fn witness_queue_stats<T: Real>(
    lambda_w: T,
    p: T,
    mu1: T,
    mu2: T,
    tol: T,
) -> Result<WitnessQueueStats<T>, AnalyticError> {
    let mut stats = witness_mean_queue(lambda_w, p, mu1, mu2)?;
    stats.stationary_prefix = witness_stationary(lambda_w, p, mu1, mu2, tol)?.tau;
    Ok(stats)
}
