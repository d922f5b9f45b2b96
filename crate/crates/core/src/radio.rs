//! Deployment sampling and the path-loss/shadowing link model.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RadioParams, RegistrationPolicy, ScenarioConfig};
use crate::scalar::Real;

pub const SPEED_OF_LIGHT_M_S: f64 = 3e8;

/// Standard Gaussian tail probability `Q(x) = P[Z > x]`.
pub fn q_function<T: Real>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(x / std::f64::consts::SQRT_2))
}

/// Link budget with its parameters lifted into the working scalar type.
///
/// Power is handled in watts internally and converted to dB only at the
/// `*_db` accessors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub carrier_frequency_hz: T,
    pub tx_power_w: T,
    pub gain_tx: T,
    pub gain_rx: T,
    pub sensitivity_w: T,
    pub shadow_sigma_db: T,
    pub path_loss_exponent: T,
}

impl<T: Real> LinkBudget<T> {
    pub fn from_params(radio: &RadioParams) -> Self {
        LinkBudget {
            carrier_frequency_hz: T::lit(radio.carrier_frequency_hz),
            tx_power_w: T::lit(radio.tx_power_w),
            gain_tx: T::lit(radio.gain_tx),
            gain_rx: T::lit(radio.gain_rx),
            sensitivity_w: T::lit(radio.sensitivity_w),
            shadow_sigma_db: T::lit(radio.shadow_sigma_db),
            path_loss_exponent: T::lit(radio.path_loss_exponent),
        }
    }

    /// `P_t G_t G_r c² / (4πf)²`: received power at 1 m, in watts.
    fn reference_power_w(&self) -> T {
        let c = T::lit(SPEED_OF_LIGHT_M_S);
        let four_pi_f = T::lit(4.0) * T::PI() * self.carrier_frequency_hz;
        self.tx_power_w * self.gain_tx * self.gain_rx * c * c / (four_pi_f * four_pi_f)
    }

    pub fn mean_received_power_w(&self, distance_m: T) -> T {
        self.reference_power_w() / distance_m.powf(self.path_loss_exponent)
    }

    pub fn mean_received_power_db(&self, distance_m: T) -> T {
        T::lit(10.0) * self.mean_received_power_w(distance_m).log10()
    }

    /// Shadowing margin in dB that the link must overcome: `10 log10(γ / P̄_r(d))`,
    /// written as `10 β log10(d / d_med)` so it vanishes exactly at the median distance.
    pub fn required_margin_db(&self, distance_m: T) -> T {
        T::lit(10.0)
            * self.path_loss_exponent
            * (distance_m / self.median_outage_distance_m()).log10()
    }

    pub fn outage_probability(&self, distance_m: T) -> T {
        let arg = self.required_margin_db(distance_m) / self.shadow_sigma_db;
        (T::one() - q_function(arg)).clamp_unit()
    }

    pub fn success_probability(&self, distance_m: T) -> T {
        q_function(self.required_margin_db(distance_m) / self.shadow_sigma_db).clamp_unit()
    }

    /// Distance at which the mean received power equals the sensitivity.
    pub fn median_outage_distance_m(&self) -> T {
        (self.reference_power_w() / self.sensitivity_w).powf(T::one() / self.path_loss_exponent)
    }
}

pub fn mean_received_power_db(distance_m: f64, radio: &RadioParams) -> f64 {
    LinkBudget::<f64>::from_params(radio).mean_received_power_db(distance_m)
}

pub fn outage_probability(distance_m: f64, radio: &RadioParams) -> f64 {
    LinkBudget::<f64>::from_params(radio).outage_probability(distance_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Sampled positions plus the shared registry. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub device_positions: Vec<Point>,
    pub witness_positions: Vec<Point>,
    /// `registration[i]` is the witness device `i` authenticated with.
    pub registration: Vec<usize>,
}

impl Deployment {
    pub fn num_devices(&self) -> usize {
        self.device_positions.len()
    }

    pub fn num_witnesses(&self) -> usize {
        self.witness_positions.len()
    }

    pub fn distance(&self, device: usize, witness: usize) -> f64 {
        self.device_positions[device].distance(&self.witness_positions[witness])
    }

    /// Number of devices registered with each witness.
    pub fn registration_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_witnesses()];
        for &w in &self.registration {
            counts[w] += 1;
        }
        counts
    }

    pub fn is_local(&self, device: usize, witness: usize) -> bool {
        self.registration[device] == witness
    }
}

pub fn sample_deployment(cfg: &ScenarioConfig, seed: u64) -> Deployment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = cfg.area_side_m;
    let point = |rng: &mut ChaCha8Rng| Point {
        x: rng.random::<f64>() * side,
        y: rng.random::<f64>() * side,
    };
    let device_positions: Vec<Point> = (0..cfg.num_devices).map(|_| point(&mut rng)).collect();
    let witness_positions: Vec<Point> = (0..cfg.num_witnesses).map(|_| point(&mut rng)).collect();
    let v = cfg.num_witnesses;
    let registration = match cfg.registration_policy {
        RegistrationPolicy::UniformRandom => (0..cfg.num_devices)
            .map(|_| rng.random_range(0..v))
            .collect(),
        RegistrationPolicy::Nearest => device_positions
            .iter()
            .map(|d| {
                witness_positions
                    .iter()
                    .enumerate()
                    .min_by(|a, b| d.distance(a.1).total_cmp(&d.distance(b.1)))
                    .map(|(w, _)| w)
                    .unwrap_or(0)
            })
            .collect(),
    };
    Deployment {
        device_positions,
        witness_positions,
        registration,
    }
}

/// Per-attempt delivery probabilities `p_s(i, w)`, row-major by device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSuccessMatrix {
    num_devices: usize,
    num_witnesses: usize,
    p_s: Vec<f64>,
}

impl LinkSuccessMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let num_devices = rows.len();
        let num_witnesses = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == num_witnesses),
            "ragged success matrix"
        );
        LinkSuccessMatrix {
            num_devices,
            num_witnesses,
            p_s: rows.into_iter().flatten().collect(),
        }
    }

    /// Every link succeeds with the same probability.
    pub fn uniform(num_devices: usize, num_witnesses: usize, p: f64) -> Self {
        LinkSuccessMatrix {
            num_devices,
            num_witnesses,
            p_s: vec![p; num_devices * num_witnesses],
        }
    }

    pub fn num_devices(&self) -> usize {
        self.num_devices
    }

    pub fn num_witnesses(&self) -> usize {
        self.num_witnesses
    }

    pub fn get(&self, device: usize, witness: usize) -> f64 {
        self.p_s[device * self.num_witnesses + witness]
    }

    pub fn row(&self, device: usize) -> &[f64] {
        &self.p_s[device * self.num_witnesses..(device + 1) * self.num_witnesses]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.p_s
            .chunks(self.num_witnesses.max(1))
            .take(self.num_devices)
    }
}

pub fn success_matrix(dep: &Deployment, radio: &RadioParams, floor_m: f64) -> LinkSuccessMatrix {
    let budget = LinkBudget::<f64>::from_params(radio);
    let v = dep.num_witnesses();
    let p_s: Vec<f64> = (0..dep.num_devices())
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..v).map(move |w| budget.success_probability(dep.distance(i, w).max(floor_m)))
        })
        .collect();
    LinkSuccessMatrix {
        num_devices: dep.num_devices(),
        num_witnesses: v,
        p_s,
    }
}

/// One row per (device, witness): `device_id,witness_id,distance_m,p_s`.
pub fn write_links_csv<W: Write>(
    dep: &Deployment,
    ps: &LinkSuccessMatrix,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "device_id,witness_id,distance_m,p_s")?;
    for i in 0..dep.num_devices() {
        for w in 0..dep.num_witnesses() {
            writeln!(out, "{i},{w},{},{}", dep.distance(i, w), ps.get(i, w))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> RadioParams {
        RadioParams::default()
    }

    #[test]
    fn log_distance_law() {
        let r = table1();
        let drop = mean_received_power_db(20.0, &r) - mean_received_power_db(40.0, &r);
        assert!((drop - 30.0 * 2f64.log10()).abs() < 1e-12);
        assert!((drop - 9.031).abs() < 1e-3);

        let mut louder = r;
        louder.gain_tx *= 10.0;
        let gain = mean_received_power_db(55.0, &louder) - mean_received_power_db(55.0, &r);
        assert!((gain - 10.0).abs() < 1e-12);
    }

    #[test]
    fn median_outage_distance_matches_sensitivity() {
        let r = table1();
        // Root of mean_received_power_db(d) = 10 log10(γ) by bisection.
        let target = 10.0 * r.sensitivity_w.log10();
        let (mut lo, mut hi) = (1.0f64, 1000.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_received_power_db(mid, &r) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 80.74).abs() < 0.01, "root at {lo}");
        assert!((mean_received_power_db(80.74, &r) - target).abs() < 0.05);

        let budget = LinkBudget::<f64>::from_params(&r);
        assert!((budget.median_outage_distance_m() - lo).abs() < 1e-9);
        assert_eq!(
            budget.outage_probability(budget.median_outage_distance_m()),
            0.5
        );
    }

    #[test]
    fn outage_limits() {
        let r = table1();
        assert!(outage_probability(1.0, &r) < 1e-6);
        assert!((outage_probability(120.0, &r) - 0.805).abs() < 1e-3);
    }

    #[test]
    fn q_function_accuracy() {
        // Reference values of the standard normal upper tail.
        let cases = [
            (0.0f64, 0.5f64),
            (1.0, 0.158_655_253_931_457_05),
            (2.0, 0.022_750_131_948_179_21),
            (-1.5, 0.933_192_798_731_141_9),
            (5.0, 2.866_515_718_791_939e-7),
        ];
        for (x, want) in cases {
            assert!(
                (q_function(x) - want).abs() < 1e-12,
                "Q({x}) = {}",
                q_function(x)
            );
        }
    }

    #[test]
    fn outage_and_q_sum_to_one() {
        let budget = LinkBudget::<f64>::from_params(&table1());
        for d in [1.0, 3.0, 17.0, 80.0, 140.0, 1e4] {
            let arg = budget.required_margin_db(d) / budget.shadow_sigma_db;
            assert!((budget.outage_probability(d) + q_function(arg) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_in_distance_sensitivity_and_power() {
        let r = table1();
        let mut prev = 0.0;
        for step in 0..400 {
            let d = 1.0 + step as f64 * 0.5;
            let p = outage_probability(d, &r);
            assert!(p >= prev && (0.0..=1.0).contains(&p));
            prev = p;
        }
        let mut deaf = r;
        deaf.sensitivity_w *= 2.0;
        let mut loud = r;
        loud.tx_power_w *= 2.0;
        for d in [10.0, 60.0, 100.0] {
            assert!(outage_probability(d, &deaf) >= outage_probability(d, &r));
            assert!(outage_probability(d, &loud) <= outage_probability(d, &r));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let budget = LinkBudget::<f32>::from_params(&table1());
        assert!((budget.median_outage_distance_m() - 80.74).abs() < 0.01);
        assert!((budget.outage_probability(120.0) - 0.805).abs() < 1e-3);
    }

    #[test]
    fn deployment_is_deterministic_and_in_bounds() {
        let cfg = ScenarioConfig::with_witnesses(4);
        let a = sample_deployment(&cfg, 9);
        assert_eq!(a, sample_deployment(&cfg, 9));
        assert_ne!(a, sample_deployment(&cfg, 10));
        assert_eq!(a.num_devices(), 500);
        for p in a.device_positions.iter().chain(&a.witness_positions) {
            assert!((0.0..=100.0).contains(&p.x) && (0.0..=100.0).contains(&p.y));
        }
        assert!(a.registration.iter().all(|&w| w < 4));
    }

    #[test]
    fn single_witness_takes_every_registration() {
        for policy in [
            RegistrationPolicy::UniformRandom,
            RegistrationPolicy::Nearest,
        ] {
            let mut cfg = ScenarioConfig::with_witnesses(1);
            cfg.registration_policy = policy;
            let dep = sample_deployment(&cfg, 3);
            assert!(dep.registration.iter().all(|&w| w == 0));
        }
    }

    #[test]
    fn nearest_policy_picks_closest() {
        let mut cfg = ScenarioConfig::with_witnesses(5);
        cfg.registration_policy = RegistrationPolicy::Nearest;
        let dep = sample_deployment(&cfg, 21);
        for i in 0..dep.num_devices() {
            let mine = dep.distance(i, dep.registration[i]);
            assert!((0..5).all(|w| dep.distance(i, w) >= mine));
        }
    }

    #[test]
    fn uniform_registration_shares_within_binomial_band() {
        let mut cfg = ScenarioConfig::with_witnesses(4);
        cfg.num_devices = 100_000;
        let dep = sample_deployment(&cfg, 77);
        let n = cfg.num_devices as f64;
        let sigma = (0.25 * 0.75 / n).sqrt();
        for c in dep.registration_counts() {
            assert!((c as f64 / n - 0.25).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn success_matrix_clamps_and_orders_by_distance() {
        let dep = Deployment {
            device_positions: vec![Point { x: 10.0, y: 10.0 }, Point { x: 10.0, y: 10.0 }],
            witness_positions: vec![
                Point { x: 10.0, y: 10.0 },
                Point { x: 60.0, y: 10.0 },
                Point { x: 10.0, y: 100.0 },
                Point { x: 40.0, y: 10.0 },
            ],
            registration: vec![0, 1],
        };
        let ps = success_matrix(&dep, &table1(), 1.0);
        assert!(ps.get(0, 0) > 1.0 - 1e-6);
        let row = ps.row(1);
        let mut by_dist: Vec<usize> = (0..4).collect();
        by_dist.sort_by(|&a, &b| dep.distance(1, a).total_cmp(&dep.distance(1, b)));
        for pair in by_dist.windows(2) {
            assert!(row[pair[0]] >= row[pair[1]]);
        }
        assert!(ps
            .rows()
            .flatten()
            .all(|p| p.is_finite() && (0.0..=1.0).contains(p)));
    }

    #[test]
    fn links_csv_layout() {
        let cfg = ScenarioConfig::with_witnesses(2);
        let mut small = cfg.clone();
        small.num_devices = 3;
        let dep = sample_deployment(&small, 1);
        let ps = success_matrix(&dep, &small.radio, small.distance_floor_m);
        let mut buf = Vec::new();
        write_links_csv(&dep, &ps, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "device_id,witness_id,distance_m,p_s");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert!(lines[4].starts_with("1,1,"));
    }
}
