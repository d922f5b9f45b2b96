//! Random witness selection with retries.
//!
//! A device picks a witness uniformly at random; on an outage it retries with a
//! uniformly chosen witness it has not tried yet, for at most `l` attempts.
//!
//! The probability that witness `w` is attempted after `u` failures sums, over
//! every ordered `u`-subset of the other witnesses, the product of their
//! failure probabilities weighted by `(v-u-1)!/v!`. The product is symmetric in
//! the ordering, so each unordered subset appears `u!` times and the inner sum
//! collapses to `u! · e_u(q)`, with `e_u` the elementary symmetric polynomial
//! of the failure probabilities. That gives weight `1 / (v · C(v-1, u))` per
//! term and makes the evaluation polynomial in `v`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::LinkSuccessMatrix;
use crate::scalar::Scalar;

pub const MIN_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("retry limit {limit} outside 1..={witnesses}")]
    InvalidRetryLimit { limit: usize, witnesses: usize },
    #[error("success probability at witness {index} is outside [0, 1]")]
    InvalidProbability { index: usize },
    #[error("no witnesses to select from")]
    NoWitnesses,
    #[error("Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
}

fn check_row<T: Scalar>(ps_row: &[T], l: usize) -> Result<(), SelectionError> {
    if ps_row.is_empty() {
        return Err(SelectionError::NoWitnesses);
    }
    if l == 0 || l > ps_row.len() {
        return Err(SelectionError::InvalidRetryLimit {
            limit: l,
            witnesses: ps_row.len(),
        });
    }
    if let Some(index) = ps_row
        .iter()
        .position(|&p| !(p >= T::zero() && p <= T::one()))
    {
        return Err(SelectionError::InvalidProbability { index });
    }
    Ok(())
}

/// `e_0..=e_max` of the given values.
fn elementary_symmetric<T: Scalar>(values: impl Iterator<Item = T>, max_degree: usize) -> Vec<T> {
    let mut e = vec![T::zero(); max_degree + 1];
    e[0] = T::one();
    let mut seen = 0usize;
    for x in values {
        seen += 1;
        for u in (1..=seen.min(max_degree)).rev() {
            e[u] = e[u] + e[u - 1] * x;
        }
    }
    e
}

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    (0..k).fold(T::one(), |acc, j| {
        acc * T::from_count(n - j) / T::from_count(j + 1)
    })
}

/// Probability that each witness is attempted at least once within `l` tries.
pub fn attempt_probability_exact<T: Scalar>(
    ps_row: &[T],
    l: usize,
) -> Result<Vec<T>, SelectionError> {
    check_row(ps_row, l)?;
    let v = ps_row.len();
    let vt = T::from_count(v);
    let weights: Vec<T> = (0..l)
        .map(|u| T::one() / (vt * binomial::<T>(v - 1, u)))
        .collect();
    Ok((0..v)
        .map(|w| {
            let others = ps_row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != w)
                .map(|(_, &p)| T::one() - p);
            let e = elementary_symmetric(others, l - 1);
            (0..l).fold(T::zero(), |acc, u| acc + weights[u] * e[u])
        })
        .collect())
}

/// Probability that one of the first `l` distinct witnesses accepts the
/// transaction.
pub fn delivery_success_probability<T: Scalar>(
    ps_row: &[T],
    l: usize,
) -> Result<T, SelectionError> {
    check_row(ps_row, l)?;
    let v = ps_row.len();
    let e = elementary_symmetric(ps_row.iter().map(|&p| T::one() - p), l);
    Ok((T::one() - e[l] / binomial::<T>(v, l)).clamp_unit())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProfile<T> {
    pub attempt_prob: Vec<T>,
    pub delivery_prob: T,
    pub fail_prob: T,
}

impl<T: Scalar> SelectionProfile<T> {
    pub fn compute(ps_row: &[T], l: usize) -> Result<Self, SelectionError> {
        let attempt_prob = attempt_probability_exact(ps_row, l)?;
        let delivery_prob = delivery_success_probability(ps_row, l)?;
        Ok(SelectionProfile {
            attempt_prob,
            delivery_prob,
            fail_prob: T::one() - delivery_prob,
        })
    }

    /// Probability that the transaction is accepted by `witness`.
    pub fn delivered_to(&self, ps_row: &[T], witness: usize) -> T {
        self.attempt_prob[witness] * ps_row[witness]
    }
}

pub fn profiles_for(
    ps: &LinkSuccessMatrix,
    l: usize,
) -> Result<Vec<SelectionProfile<f64>>, SelectionError> {
    (0..ps.num_devices())
        .into_par_iter()
        .map(|i| SelectionProfile::compute(ps.row(i), l))
        .collect()
}

/// Simulated attempt frequencies with normal-approximation 95% half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct McAttemptEstimate {
    pub attempt_prob: Vec<f64>,
    pub half_width: Vec<f64>,
    pub delivery_prob: f64,
    pub delivery_half_width: f64,
}

/// One retry sequence: up to `l` attempts at distinct uniformly chosen
/// witnesses, each succeeding independently with its link probability.
/// Returns the witness that received the transaction. `order` is scratch
/// space holding a permutation of `0..v`; `on_attempt` sees every witness tried.
pub fn sample_delivery<R: Rng + ?Sized>(
    rng: &mut R,
    ps_row: &[f64],
    l: usize,
    order: &mut [usize],
    mut on_attempt: impl FnMut(usize),
) -> Option<usize> {
    let v = order.len();
    for attempt in 0..l.min(v) {
        // Partial Fisher-Yates: position `attempt` gets a uniform untried witness.
        let pick = rng.random_range(attempt..v);
        order.swap(attempt, pick);
        let w = order[attempt];
        on_attempt(w);
        if rng.random::<f64>() < ps_row[w] {
            return Some(w);
        }
    }
    None
}

pub fn attempt_probability_mc(
    ps_row: &[f64],
    l: usize,
    samples: usize,
    seed: u64,
) -> Result<McAttemptEstimate, SelectionError> {
    check_row(ps_row, l)?;
    if samples < MIN_MC_SAMPLES {
        return Err(SelectionError::TooFewSamples(samples));
    }
    let v = ps_row.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..v).collect();
    let mut attempted = vec![0u64; v];
    let mut delivered = 0u64;
    for _ in 0..samples {
        if sample_delivery(&mut rng, ps_row, l, &mut order, |w| attempted[w] += 1).is_some() {
            delivered += 1;
        }
    }
    let n = samples as f64;
    let hw = |count: u64| {
        let p = count as f64 / n;
        1.96 * (p * (1.0 - p) / n).sqrt()
    };
    Ok(McAttemptEstimate {
        attempt_prob: attempted.iter().map(|&c| c as f64 / n).collect(),
        half_width: attempted.iter().map(|&c| hw(c)).collect(),
        delivery_prob: delivered as f64 / n,
        delivery_half_width: hw(delivered),
    })
}

/// Mean transaction arrival rate at every witness.
pub fn witness_arrival_rates<T: Scalar>(
    profiles: &[SelectionProfile<T>],
    ps_rows: &[Vec<T>],
    lambda_tps: T,
) -> Vec<T> {
    let v = profiles.first().map_or(0, |p| p.attempt_prob.len());
    let mut rates = vec![T::zero(); v];
    for (profile, row) in profiles.iter().zip(ps_rows) {
        for (w, rate) in rates.iter_mut().enumerate() {
            *rate = *rate + profile.delivered_to(row, w) * lambda_tps;
        }
    }
    rates
}

/// [`witness_arrival_rates`] over a float success matrix.
pub fn witness_arrival_rates_matrix(
    profiles: &[SelectionProfile<f64>],
    ps: &LinkSuccessMatrix,
    lambda_tps: f64,
) -> Vec<f64> {
    let mut rates = vec![0.0; ps.num_witnesses()];
    for (i, profile) in profiles.iter().enumerate() {
        for (w, rate) in rates.iter_mut().enumerate() {
            *rate += profile.attempt_prob[w] * ps.get(i, w) * lambda_tps;
        }
    }
    rates
}

/// Fraction of delivered transactions that reach a witness other than the
/// device's own under uniform registration: `(v-1)/v`.
pub fn global_fraction<T: Scalar>(v: usize) -> T {
    assert!(v >= 1, "at least one witness");
    T::from_count(v - 1) / T::from_count(v)
}

pub fn write_attempts_csv<W: Write>(
    profiles: &[SelectionProfile<f64>],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "device_id,witness_id,attempt_prob")?;
    for (i, p) in profiles.iter().enumerate() {
        for (w, a) in p.attempt_prob.iter().enumerate() {
            writeln!(out, "{i},{w},{a}")?;
        }
    }
    Ok(())
}

pub fn write_delivery_csv<W: Write>(
    profiles: &[SelectionProfile<f64>],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "device_id,delivery_prob,fail_prob")?;
    for (i, p) in profiles.iter().enumerate() {
        writeln!(out, "{i},{},{}", p.delivery_prob, p.fail_prob)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i128>;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    /// Exhaustive walk over every attempt sequence of the retry procedure.
    fn enumerate(ps: &[f64], l: usize) -> (Vec<f64>, f64) {
        fn walk(
            ps: &[f64],
            l: usize,
            tried: &mut Vec<usize>,
            prob: f64,
            attempts: &mut [f64],
            delivered: &mut f64,
        ) {
            let v = ps.len();
            let untried: Vec<usize> = (0..v).filter(|w| !tried.contains(w)).collect();
            let pick = prob / untried.len() as f64;
            for w in untried {
                attempts[w] += pick;
                *delivered += pick * ps[w];
                if tried.len() + 1 < l {
                    tried.push(w);
                    walk(ps, l, tried, pick * (1.0 - ps[w]), attempts, delivered);
                    tried.pop();
                }
            }
        }
        let mut attempts = vec![0.0; ps.len()];
        let mut delivered = 0.0;
        walk(ps, l, &mut Vec::new(), 1.0, &mut attempts, &mut delivered);
        (attempts, delivered)
    }

    #[test]
    fn single_attempt_is_uniform() {
        let p = attempt_probability_exact(&[q(1, 3), q(1, 2), q(9, 10)], 1).unwrap();
        assert!(p.iter().all(|&x| x == q(1, 3)));
    }

    #[test]
    fn two_coin_flip_witnesses() {
        let p = attempt_probability_exact(&[q(1, 2), q(1, 2)], 2).unwrap();
        assert_eq!(p, vec![q(3, 4), q(3, 4)]);
        assert_eq!(
            delivery_success_probability(&[q(1, 2), q(1, 2)], 2).unwrap(),
            q(3, 4)
        );
        let (brute, delivered) = enumerate(&[0.5, 0.5], 2);
        assert_eq!(brute, vec![0.75, 0.75]);
        assert_eq!(delivered, 0.75);
    }

    #[test]
    fn perfect_links_never_retry() {
        for l in 1..=5 {
            let p = attempt_probability_exact(&[Q::from_integer(1); 5], l).unwrap();
            assert!(p.iter().all(|&x| x == q(1, 5)));
            assert_eq!(delivery_success_probability(&[1.0; 5], l).unwrap(), 1.0);
        }
    }

    #[test]
    fn dead_links_try_l_witnesses() {
        for l in 1..=4 {
            let p = attempt_probability_exact(&[Q::from_integer(0); 4], l).unwrap();
            assert!(p.iter().all(|&x| x == q(l as i128, 4)));
            assert_eq!(delivery_success_probability(&[0.0; 4], l).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            attempt_probability_exact(&[0.5, 0.5], 3).unwrap_err(),
            SelectionError::InvalidRetryLimit {
                limit: 3,
                witnesses: 2
            }
        );
        assert!(attempt_probability_exact::<f64>(&[], 1).is_err());
        assert_eq!(
            delivery_success_probability(&[0.5, 1.5], 1).unwrap_err(),
            SelectionError::InvalidProbability { index: 1 }
        );
        assert_eq!(
            attempt_probability_mc(&[0.5], 1, 10, 0).unwrap_err(),
            SelectionError::TooFewSamples(10)
        );
    }

    #[test]
    fn global_fraction_values() {
        assert_eq!(global_fraction::<f64>(1), 0.0);
        assert_eq!(global_fraction::<f64>(2), 0.5);
        assert_eq!(global_fraction::<Q>(10), q(9, 10));
    }

    #[test]
    fn lossless_arrivals_split_evenly() {
        let k = 12;
        let rows = vec![vec![Q::from_integer(1); 4]; k];
        let profiles: Vec<_> = rows
            .iter()
            .map(|r| SelectionProfile::compute(r, 3).unwrap())
            .collect();
        let rates = witness_arrival_rates(&profiles, &rows, q(1, 100));
        assert!(rates.iter().all(|&r| r == q(12, 400)));
        let idle = witness_arrival_rates(&profiles, &rows, Q::from_integer(0));
        assert!(idle.iter().all(|&r| r == Q::from_integer(0)));
    }

    #[test]
    fn arrival_rates_account_for_deliveries() {
        let ps = LinkSuccessMatrix::from_rows(vec![
            vec![0.9, 0.2, 0.4],
            vec![0.1, 0.1, 0.7],
            vec![0.5, 0.6, 0.05],
        ]);
        let profiles = profiles_for(&ps, 2).unwrap();
        let lambda = 0.3;
        let total: f64 = witness_arrival_rates_matrix(&profiles, &ps, lambda)
            .iter()
            .sum();
        let expected: f64 = profiles.iter().map(|p| p.delivery_prob * lambda).sum();
        assert!((total - expected).abs() < 1e-12);
        assert!(total <= 3.0 * lambda);
    }

    #[test]
    fn mc_is_deterministic_and_close_to_exact() {
        let row = [0.3, 0.8, 0.55, 0.1];
        let a = attempt_probability_mc(&row, 3, 200_000, 5).unwrap();
        assert_eq!(a, attempt_probability_mc(&row, 3, 200_000, 5).unwrap());
        let exact = attempt_probability_exact(&row, 3).unwrap();
        for w in 0..4 {
            assert!((a.attempt_prob[w] - exact[w]).abs() < 4.0 * a.half_width[w].max(1e-4));
        }
        let all_fail = attempt_probability_mc(&[0.0; 5], 5, 10_000, 1).unwrap();
        assert!(all_fail.attempt_prob.iter().all(|&p| p == 1.0));
        let all_fail = attempt_probability_mc(&[0.0; 5], 2, 50_000, 1).unwrap();
        assert!(all_fail
            .attempt_prob
            .iter()
            .all(|&p| (p - 0.4).abs() < 0.01));
    }

    #[test]
    fn csv_exports() {
        let profiles = vec![SelectionProfile::compute(&[0.5, 0.25], 2).unwrap()];
        let mut a = Vec::new();
        write_attempts_csv(&profiles, &mut a).unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "device_id,witness_id,attempt_prob\n0,0,0.875\n0,1,0.75\n"
        );
        let mut d = Vec::new();
        write_delivery_csv(&profiles, &mut d).unwrap();
        assert!(String::from_utf8(d)
            .unwrap()
            .starts_with("device_id,delivery_prob,fail_prob\n0,0.625,0.375"));
    }

    fn arb_row() -> impl Strategy<Value = (Vec<f64>, usize)> {
        prop::collection::vec(0.0f64..=1.0, 1..=7).prop_flat_map(|row| {
            let v = row.len();
            (Just(row), 1..=v)
        })
    }

    proptest! {
        #[test]
        fn matches_enumeration_and_accounts((row, l) in arb_row()) {
            let exact = attempt_probability_exact(&row, l).unwrap();
            let (brute, delivered) = enumerate(&row, l);
            for (a, b) in exact.iter().zip(&brute) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let profile = SelectionProfile::compute(&row, l).unwrap();
            let reached: f64 = (0..row.len()).map(|w| profile.delivered_to(&row, w)).sum();
            prop_assert!((reached + profile.fail_prob - 1.0).abs() < 1e-9);
            prop_assert!((profile.delivery_prob - delivered).abs() < 1e-12);
        }

        #[test]
        fn permuting_witnesses_permutes_attempts((row, l) in arb_row(), shift in 0usize..7) {
            let v = row.len();
            let rotated: Vec<f64> = (0..v).map(|j| row[(j + shift) % v]).collect();
            let a = attempt_probability_exact(&row, l).unwrap();
            let b = attempt_probability_exact(&rotated, l).unwrap();
            for j in 0..v {
                prop_assert!((b[j] - a[(j + shift) % v]).abs() < 1e-12);
            }
        }

        #[test]
        fn more_retries_never_hurt((row, l) in arb_row()) {
            if l < row.len() {
                let now = delivery_success_probability(&row, l).unwrap();
                let more = delivery_success_probability(&row, l + 1).unwrap();
                prop_assert!(more >= now - 1e-12);
            }
        }

        #[test]
        fn full_retries_lift_every_witness(row in prop::collection::vec(0.0f64..0.999, 2..=7)) {
            let v = row.len();
            let a = attempt_probability_exact(&row, v).unwrap();
            prop_assert!(a.iter().all(|&p| p > 1.0 / v as f64));
        }
    }
}
