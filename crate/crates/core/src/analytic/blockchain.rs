//! Global blockchain as a batch-service queue.
//!
//! Transactions arrive as a Poisson stream of rate `λ_B`. A block holds at
//! most `b` transactions and its generation time `U` is exponential with rate
//! `μ_B`. When a block completes it confirms the (up to) `b` oldest pending
//! transactions; a transaction arriving while a block is being generated can
//! still be included in it if there is room. By memorylessness of `U`, it makes
//! no difference whether generation idles while the pool is empty.
//!
//! Let `X` be the number of pending transactions just before a block
//! completes. Successive values form the embedded chain
//! `X' = (X - b)^+ + A`, where `A` counts arrivals during one generation time
//! (geometric with ratio `λ_B / (λ_B + μ_B)` for exponential `U`). The chain is
//! solved through its characteristic equation `μ z^{b+1} - (λ+μ) z + λ = 0`,
//! whose unique root in `(0, 1)` makes `P[X = n] = (1 - z) z^n` stationary.
//! The boundary weights `α_n = μ_B P[X = n]`, `n < b`, are the rates of block
//! completions that find `n` pending transactions.

use serde::{Deserialize, Serialize};

use super::AnalyticError;
use crate::scalar::{Real, Scalar};

/// Tail mass below which the embedded-chain state space is cut off.
pub const EMBEDDED_TRUNCATION_TOL: f64 = 1e-9;
const ROOT_BISECTION_STEPS: usize = 200;

/// `λ_B = p Σ_w λ_w`.
pub fn gb_arrival_rate<T: Scalar>(lambda_w: &[T], p: T) -> T {
    p * lambda_w.iter().fold(T::zero(), |acc, &x| acc + x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbStability<T> {
    pub stable: bool,
    /// `λ_B E[U] / b`.
    pub utilization: T,
}

pub fn gb_stability<T: Scalar>(lambda_b: T, mu_b: T, b: usize) -> GbStability<T> {
    let utilization = lambda_b / (mu_b * T::from_count(b));
    GbStability {
        stable: utilization < T::one(),
        utilization,
    }
}

/// Block generation time distribution, accessed through log-density and
/// log-survival so the hazard rate stays finite deep in the tail.
pub trait BlockTime<T: Real> {
    fn log_pdf(&self, x: T) -> T;
    fn log_survival(&self, x: T) -> T;
    fn mean(&self) -> T;
    fn second_moment(&self) -> T;

    fn pdf(&self, x: T) -> T {
        self.log_pdf(x).exp()
    }

    fn cdf(&self, x: T) -> T {
        T::one() - self.log_survival(x).exp()
    }

    /// `θ(x) = g(x) / (1 - G(x))`.
    fn hazard_rate(&self, x: T) -> T {
        (self.log_pdf(x) - self.log_survival(x)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialBlockTime<T> {
    pub rate: T,
}

impl<T: Real> BlockTime<T> for ExponentialBlockTime<T> {
    fn log_pdf(&self, x: T) -> T {
        self.rate.ln() - self.rate * x
    }

    fn log_survival(&self, x: T) -> T {
        -self.rate * x
    }

    fn mean(&self) -> T {
        T::one() / self.rate
    }

    fn second_moment(&self) -> T {
        T::two() / (self.rate * self.rate)
    }
}

pub fn hazard_rate<T: Real>(mu_b: T, x: T) -> T {
    ExponentialBlockTime { rate: mu_b }.hazard_rate(x)
}

/// Embedded-chain solution at block completion epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbAlpha<T> {
    /// `α_0 .. α_{b-1}`, completions per second that find `n` pending.
    pub alpha: Vec<T>,
    /// Geometric ratio of `P[X = n]`.
    pub root: T,
    /// Number of embedded states before the tail mass drops below tolerance.
    /// The weights themselves are closed-form and never cut off.
    pub truncation_len: usize,
    pub block_rate: T,
}

impl<T: Real> GbAlpha<T> {
    /// `P[X = n]` for the retained states.
    pub fn departure_probability(&self, n: usize) -> T {
        (T::one() - self.root) * self.root.powi(n as i32)
    }
}

/// `Σ_{j=1}^{b} z^j`, accurate as `z -> 1`.
fn partial_geometric_sum<T: Real>(z: T, b: usize) -> T {
    let bt = T::from_count(b);
    if z <= T::zero() {
        return T::zero();
    }
    let gap = T::one() - z;
    if gap <= T::epsilon() {
        return bt;
    }
    let log_z = (-gap).ln_1p();
    z * (-(bt * log_z).exp_m1()) / gap
}

/// Root in `(0, 1)` of `λ = μ Σ_{j=1}^{b} z^j`.
fn characteristic_root<T: Real>(lambda_b: T, mu_b: T, b: usize) -> Result<T, AnalyticError> {
    if lambda_b == T::zero() {
        return Ok(T::zero());
    }
    let excess = |z: T| lambda_b - mu_b * partial_geometric_sum(z, b);
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..ROOT_BISECTION_STEPS {
        let mid = (lo + hi) / T::two();
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = (lo + hi) / T::two();
    let residual = excess(z).abs() / lambda_b;
    if !(z > T::zero() && z < T::one()) || residual > T::lit(1e-6) {
        return Err(AnalyticError::NonConvergence {
            iterations: ROOT_BISECTION_STEPS,
            residual: residual.as_f64(),
        });
    }
    Ok(z)
}

fn require_stable<T: Real>(lambda_b: T, mu_b: T, b: usize) -> Result<(), AnalyticError> {
    if b == 0 || !(mu_b > T::zero()) || lambda_b < T::zero() {
        return Err(AnalyticError::DomainError(
            "block size, block rate and arrival rate must be positive".into(),
        ));
    }
    let s = gb_stability(lambda_b, mu_b, b);
    if s.stable {
        Ok(())
    } else {
        Err(AnalyticError::Unstable {
            load: s.utilization.as_f64(),
        })
    }
}

pub fn gb_alpha<T: Real>(
    lambda_b: T,
    mu_b: T,
    b: usize,
    trunc_tol: T,
) -> Result<GbAlpha<T>, AnalyticError> {
    require_stable(lambda_b, mu_b, b)?;
    if !(trunc_tol > T::zero() && trunc_tol < T::one()) {
        return Err(AnalyticError::DomainError(
            "truncation tolerance must lie in (0, 1)".into(),
        ));
    }
    let z = characteristic_root(lambda_b, mu_b, b)?;
    // Tail mass beyond N states is z^N.
    let truncation_len = if z == T::zero() {
        1
    } else {
        (trunc_tol.ln() / z.ln())
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX)
            .max(1)
    };
    let alpha = (0..b)
        .map(|n| mu_b * (T::one() - z) * z.powi(n as i32))
        .collect();
    Ok(GbAlpha {
        alpha,
        root: z,
        truncation_len,
        block_rate: mu_b,
    })
}

/// Mean confirmation time from the boundary weights:
///
/// ```text
/// E[T_g] = [ λ²E[U²] − b(b−1) − 2b(b − λE[U])
///            + Σ_{n<b} α_n ( λE[U²](b−n) + 2bE[U](b−n) + E[U](b²−b−n²+n) ) ]
///          / (2λ(b − λE[U]))
/// ```
pub fn confirmation_time_from_alpha<T: Real>(
    lambda_b: T,
    block: &impl BlockTime<T>,
    b: usize,
    alpha: &[T],
) -> T {
    let eu = block.mean();
    let eu2 = block.second_moment();
    let bt = T::from_count(b);
    let slack = bt - lambda_b * eu;
    let mut total = lambda_b * lambda_b * eu2 - bt * (bt - T::one()) - T::two() * bt * slack;
    for (n, &a) in alpha.iter().enumerate().take(b) {
        let nt = T::from_count(n);
        let gap = bt - nt;
        total = total
            + a * (lambda_b * eu2 * gap
                + T::two() * bt * eu * gap
                + eu * (bt * bt - bt - nt * nt + nt));
    }
    total / (T::two() * lambda_b * slack)
}

/// Mean confirmation time; at `λ_B = 0` returns the light-traffic limit `E[U]`.
pub fn gb_mean_confirmation_time<T: Real>(
    lambda_b: T,
    mu_b: T,
    b: usize,
) -> Result<T, AnalyticError> {
    require_stable(lambda_b, mu_b, b)?;
    let block = ExponentialBlockTime { rate: mu_b };
    if lambda_b == T::zero() {
        return Ok(block.mean());
    }
    let alpha = gb_alpha(lambda_b, mu_b, b, T::lit(EMBEDDED_TRUNCATION_TOL))?;
    Ok(confirmation_time_from_alpha(
        lambda_b,
        &block,
        b,
        &alpha.alpha,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbQueueStats<T> {
    pub lambda_b: T,
    pub stable: bool,
    pub utilization: T,
    /// `E[T_g]`, `None` when unstable.
    pub mean_confirmation_s: Option<T>,
    /// Mean number pending, by Little's law.
    pub mean_in_system: Option<T>,
    /// Mean number beyond one block's capacity (`E[(N - b)^+]`).
    pub mean_queued_beyond_block: Option<T>,
    pub alpha: Vec<T>,
    pub block_rate: T,
}

pub fn gb_queue_stats<T: Real>(
    lambda_b: T,
    mu_b: T,
    b: usize,
) -> Result<GbQueueStats<T>, AnalyticError> {
    let stability = gb_stability(lambda_b, mu_b, b);
    if !stability.stable {
        return Ok(GbQueueStats {
            lambda_b,
            stable: false,
            utilization: stability.utilization,
            mean_confirmation_s: None,
            mean_in_system: None,
            mean_queued_beyond_block: None,
            alpha: Vec::new(),
            block_rate: mu_b,
        });
    }
    let alpha = gb_alpha(lambda_b, mu_b, b, T::lit(EMBEDDED_TRUNCATION_TOL))?;
    let t = gb_mean_confirmation_time(lambda_b, mu_b, b)?;
    let z = alpha.root;
    Ok(GbQueueStats {
        lambda_b,
        stable: true,
        utilization: stability.utilization,
        mean_confirmation_s: Some(t),
        mean_in_system: Some(lambda_b * t),
        mean_queued_beyond_block: Some(z.powi(b as i32 + 1) / (T::one() - z)),
        alpha: alpha.alpha,
        block_rate: mu_b,
    })
}
