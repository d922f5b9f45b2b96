//! Scenario configuration: parameters, validation, and the two accepted
//! document formats (sectioned `key=value` text and nested JSON).
//!
//! Every key is unique across sections, so both formats flatten into the same
//! [`RawConfig`] map before resolution. Unset keys fall back to the reference
//! deployment values; `num_witnesses` and `per_device_rate_tps` are swept by
//! experiments and have no default.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("malformed config at line {line}: {reason}")]
    MalformedInput { line: usize, reason: String },
    #[error("invariant violated for `{field}`: {reason}")]
    InvariantViolation { field: String, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
}

fn violation(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvariantViolation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationPolicy {
    /// Each device registers with a uniformly chosen witness.
    UniformRandom,
    /// Each device registers with the geometrically closest witness.
    Nearest,
}

impl RegistrationPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            RegistrationPolicy::UniformRandom => "uniform_random",
            RegistrationPolicy::Nearest => "nearest",
        }
    }
}

impl FromStr for RegistrationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform_random" | "uniformrandom" | "uniform" => Ok(RegistrationPolicy::UniformRandom),
            "nearest" => Ok(RegistrationPolicy::Nearest),
            other => Err(format!("unknown registration policy `{other}`")),
        }
    }
}

/// Path loss plus log-normal shadowing link model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub carrier_frequency_hz: f64,
    pub tx_power_w: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
    /// Receiver sensitivity in watts.
    pub sensitivity_w: f64,
    pub shadow_sigma_db: f64,
    pub path_loss_exponent: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            carrier_frequency_hz: 914e6,
            tx_power_w: 0.281_838_15,
            gain_tx: 1.0,
            gain_rx: 1.0,
            sensitivity_w: 3.652e-10,
            shadow_sigma_db: 6.0,
            path_loss_exponent: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    /// Poisson generation rate of every device. `None` until an experiment
    /// fixes it.
    pub per_device_rate_tps: Option<f64>,
    /// Maximum number of distinct witnesses tried per transaction.
    pub retry_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// Witness service rate for global transactions.
    pub mu1_tps: f64,
    /// Witness service rate for local transactions.
    pub mu2_tps: f64,
    /// Maximum transactions per block.
    pub block_size: usize,
    /// Rate of the exponential block generation time.
    pub block_rate_bps: f64,
}

impl Default for QueueParams {
    fn default() -> Self {
        QueueParams {
            mu1_tps: 2.0,
            mu2_tps: 4.0,
            block_size: 1000,
            block_rate_bps: 1.8e-3,
        }
    }
}

impl QueueParams {
    pub fn mean_block_time_s(&self) -> f64 {
        1.0 / self.block_rate_bps
    }

    /// Largest sustainable GB arrival rate, `b / E[U]`.
    pub fn gb_capacity_tps(&self) -> f64 {
        self.block_size as f64 * self.block_rate_bps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub area_side_m: f64,
    pub num_devices: usize,
    pub num_witnesses: usize,
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub queue: QueueParams,
    pub registration_policy: RegistrationPolicy,
    pub rng_seed: u64,
    pub deployment_replications: usize,
    pub distance_floor_m: f64,
}

impl ScenarioConfig {
    /// Reference deployment with `num_witnesses` witnesses and no traffic rate.
    pub fn with_witnesses(num_witnesses: usize) -> Self {
        ScenarioConfig {
            area_side_m: 100.0,
            num_devices: 500,
            num_witnesses,
            radio: RadioParams::default(),
            traffic: TrafficParams {
                per_device_rate_tps: None,
                retry_limit: num_witnesses,
            },
            queue: QueueParams::default(),
            registration_policy: RegistrationPolicy::UniformRandom,
            rng_seed: 0,
            deployment_replications: 1000,
            distance_floor_m: 1.0,
        }
    }

    pub fn with_rate(mut self, per_device_rate_tps: f64) -> Self {
        self.traffic.per_device_rate_tps = Some(per_device_rate_tps);
        self
    }

    /// Per-device rate, or an invariant violation naming the unset field.
    pub fn rate(&self) -> Result<f64, ConfigError> {
        self.traffic
            .per_device_rate_tps
            .ok_or_else(|| violation("per_device_rate_tps", "no generation rate set"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(violation(field, format!("must be finite and > 0, got {x}")))
            }
        };
        positive("area_side_m", self.area_side_m)?;
        positive("distance_floor_m", self.distance_floor_m)?;
        if self.num_devices == 0 {
            return Err(violation("num_devices", "must be at least 1"));
        }
        if self.num_witnesses == 0 {
            return Err(violation("num_witnesses", "must be at least 1"));
        }
        if self.deployment_replications == 0 {
            return Err(violation("deployment_replications", "must be at least 1"));
        }

        let r = &self.radio;
        positive("carrier_frequency_hz", r.carrier_frequency_hz)?;
        positive("tx_power_w", r.tx_power_w)?;
        positive("gain_tx", r.gain_tx)?;
        positive("gain_rx", r.gain_rx)?;
        positive("sensitivity_w", r.sensitivity_w)?;
        positive("shadow_sigma_db", r.shadow_sigma_db)?;
        positive("path_loss_exponent", r.path_loss_exponent)?;
        if r.path_loss_exponent < 2.0 {
            return Err(violation(
                "path_loss_exponent",
                format!("must be >= 2, got {}", r.path_loss_exponent),
            ));
        }

        if let Some(rate) = self.traffic.per_device_rate_tps {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(violation(
                    "per_device_rate_tps",
                    format!("must be >= 0, got {rate}"),
                ));
            }
        }
        let l = self.traffic.retry_limit;
        if l == 0 || l > self.num_witnesses {
            return Err(violation(
                "retry_limit",
                format!("must lie in 1..={}, got {l}", self.num_witnesses),
            ));
        }

        let q = &self.queue;
        positive("mu1_tps", q.mu1_tps)?;
        positive("mu2_tps", q.mu2_tps)?;
        positive("block_rate_bps", q.block_rate_bps)?;
        if q.block_size == 0 {
            return Err(violation("block_size", "must be at least 1"));
        }
        Ok(())
    }
}

const SCENARIO: &str = "ScenarioConfig";
const RADIO: &str = "RadioParams";
const TRAFFIC: &str = "TrafficParams";
const QUEUE: &str = "QueueParams";

/// Every accepted key and the section that owns it, in emission order.
const KEYS: &[(&str, &str)] = &[
    (SCENARIO, "area_side_m"),
    (SCENARIO, "num_devices"),
    (SCENARIO, "num_witnesses"),
    (SCENARIO, "registration_policy"),
    (SCENARIO, "rng_seed"),
    (SCENARIO, "deployment_replications"),
    (SCENARIO, "distance_floor_m"),
    (RADIO, "carrier_frequency_hz"),
    (RADIO, "tx_power_w"),
    (RADIO, "gain_tx"),
    (RADIO, "gain_rx"),
    (RADIO, "sensitivity_w"),
    (RADIO, "shadow_sigma_db"),
    (RADIO, "path_loss_exponent"),
    (TRAFFIC, "per_device_rate_tps"),
    (TRAFFIC, "retry_limit"),
    (QUEUE, "mu1_tps"),
    (QUEUE, "mu2_tps"),
    (QUEUE, "block_size"),
    (QUEUE, "block_rate_bps"),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k)| *k == key).map(|(s, _)| *s)
}

fn canonical_section(name: &str) -> Option<&'static str> {
    match name.trim() {
        "ScenarioConfig" | "scenario" => Some(SCENARIO),
        "RadioParams" | "radio" => Some(RADIO),
        "TrafficParams" | "traffic" => Some(TRAFFIC),
        "QueueParams" | "queue" => Some(QUEUE),
        _ => None,
    }
}

/// Flat key/value view of a config document, before defaults and validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Set or override a key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        if section_of(key).is_none() {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.values
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Apply a `key=value` override string (as given on a command line).
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::MalformedInput {
                line: 0,
                reason: format!("override `{assignment}` is not key=value"),
            })?;
        self.set(k, v)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| ConfigError::MalformedInput {
                    line: 0,
                    reason: format!("cannot parse `{raw}` for `{key}`"),
                }),
        }
    }

    /// Fill defaults, then validate.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let v: usize = self
            .get("num_witnesses")?
            .ok_or_else(|| violation("num_witnesses", "has no default and must be set"))?;
        let mut cfg = ScenarioConfig::with_witnesses(v);

        macro_rules! fill {
            ($($key:literal => $slot:expr),* $(,)?) => {
                $( if let Some(x) = self.get($key)? { $slot = x; } )*
            };
        }
        fill! {
            "area_side_m" => cfg.area_side_m,
            "num_devices" => cfg.num_devices,
            "rng_seed" => cfg.rng_seed,
            "deployment_replications" => cfg.deployment_replications,
            "distance_floor_m" => cfg.distance_floor_m,
            "carrier_frequency_hz" => cfg.radio.carrier_frequency_hz,
            "tx_power_w" => cfg.radio.tx_power_w,
            "gain_tx" => cfg.radio.gain_tx,
            "gain_rx" => cfg.radio.gain_rx,
            "sensitivity_w" => cfg.radio.sensitivity_w,
            "shadow_sigma_db" => cfg.radio.shadow_sigma_db,
            "path_loss_exponent" => cfg.radio.path_loss_exponent,
            "retry_limit" => cfg.traffic.retry_limit,
            "mu1_tps" => cfg.queue.mu1_tps,
            "mu2_tps" => cfg.queue.mu2_tps,
            "block_size" => cfg.queue.block_size,
            "block_rate_bps" => cfg.queue.block_rate_bps,
        }
        cfg.traffic.per_device_rate_tps = self.get("per_device_rate_tps")?;
        if let Some(raw) = self.values.get("registration_policy") {
            cfg.registration_policy = raw
                .parse()
                .map_err(|reason| ConfigError::MalformedInput { line: 0, reason })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse either document format into its flat key map.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        parse_raw_json(text)
    } else {
        parse_raw_text(text)
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_raw(text)?.resolve()
}

fn parse_raw_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section: Option<&'static str> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::MalformedInput {
                    line: lineno,
                    reason: "unterminated section header".into(),
                })?;
            section = Some(
                canonical_section(name).ok_or_else(|| ConfigError::MalformedInput {
                    line: lineno,
                    reason: format!("unknown section `{name}`"),
                })?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::MalformedInput {
                line: lineno,
                reason: format!("expected key=value, got `{line}`"),
            })?;
        let key = key.trim();
        let owner = section_of(key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        if let Some(current) = section {
            if current != owner {
                return Err(ConfigError::UnknownKey(format!("{current}.{key}")));
            }
        }
        if raw.values.contains_key(key) {
            return Err(ConfigError::MalformedInput {
                line: lineno,
                reason: format!("duplicate key `{key}`"),
            });
        }
        raw.set(key, value)?;
    }
    Ok(raw)
}

fn parse_raw_json(text: &str) -> Result<RawConfig, ConfigError> {
    use serde_json::Value;

    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::MalformedInput {
        line: e.line(),
        reason: e.to_string(),
    })?;
    let Value::Object(top) = doc else {
        return Err(ConfigError::MalformedInput {
            line: 1,
            reason: "top-level JSON value must be an object".into(),
        });
    };

    fn scalar(key: &str, v: &Value) -> Result<Option<String>, ConfigError> {
        match v {
            Value::Null => Ok(None),
            Value::String(s) => Ok(Some(s.clone())),
            Value::Number(n) => Ok(Some(n.to_string())),
            _ => Err(ConfigError::MalformedInput {
                line: 0,
                reason: format!("`{key}` must be a number or string"),
            }),
        }
    }

    let mut raw = RawConfig::default();
    for (key, value) in &top {
        let nested = match key.as_str() {
            "radio" => Some(RADIO),
            "traffic" => Some(TRAFFIC),
            "queue" => Some(QUEUE),
            _ => None,
        };
        match (nested, value) {
            (Some(sec), Value::Object(inner)) => {
                for (k, v) in inner {
                    if section_of(k) != Some(sec) {
                        return Err(ConfigError::UnknownKey(format!("{key}.{k}")));
                    }
                    if let Some(s) = scalar(k, v)? {
                        raw.set(k, &s)?;
                    }
                }
            }
            (Some(_), _) => {
                return Err(ConfigError::MalformedInput {
                    line: 0,
                    reason: format!("`{key}` must be an object"),
                })
            }
            (None, v) => {
                if section_of(key) != Some(SCENARIO) {
                    return Err(ConfigError::UnknownKey(key.clone()));
                }
                if let Some(s) = scalar(key, v)? {
                    raw.set(key, &s)?;
                }
            }
        }
    }
    Ok(raw)
}

/// Sectioned `key=value` rendering; `parse_config` inverts it exactly.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut current = "";
    for &(section, key) in KEYS {
        let value = match key {
            "area_side_m" => cfg.area_side_m.to_string(),
            "num_devices" => cfg.num_devices.to_string(),
            "num_witnesses" => cfg.num_witnesses.to_string(),
            "registration_policy" => cfg.registration_policy.as_str().to_string(),
            "rng_seed" => cfg.rng_seed.to_string(),
            "deployment_replications" => cfg.deployment_replications.to_string(),
            "distance_floor_m" => cfg.distance_floor_m.to_string(),
            "carrier_frequency_hz" => cfg.radio.carrier_frequency_hz.to_string(),
            "tx_power_w" => cfg.radio.tx_power_w.to_string(),
            "gain_tx" => cfg.radio.gain_tx.to_string(),
            "gain_rx" => cfg.radio.gain_rx.to_string(),
            "sensitivity_w" => cfg.radio.sensitivity_w.to_string(),
            "shadow_sigma_db" => cfg.radio.shadow_sigma_db.to_string(),
            "path_loss_exponent" => cfg.radio.path_loss_exponent.to_string(),
            "per_device_rate_tps" => match cfg.traffic.per_device_rate_tps {
                Some(rate) => rate.to_string(),
                None => continue,
            },
            "retry_limit" => cfg.traffic.retry_limit.to_string(),
            "mu1_tps" => cfg.queue.mu1_tps.to_string(),
            "mu2_tps" => cfg.queue.mu2_tps.to_string(),
            "block_size" => cfg.queue.block_size.to_string(),
            "block_rate_bps" => cfg.queue.block_rate_bps.to_string(),
            _ => unreachable!("key table and emitter out of sync"),
        };
        if section != current {
            if !current.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            current = section;
        }
        let _ = writeln!(out, "{key}={value}");
    }
    out
}

pub fn emit_config_json(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_needs_witness_count() {
        let err = parse_config("").unwrap_err();
        assert!(
            matches!(err, ConfigError::InvariantViolation { ref field, .. } if field == "num_witnesses")
        );
    }

    #[test]
    fn reference_defaults_fill_in() {
        let cfg = parse_config("num_witnesses=2").unwrap();
        assert_eq!(cfg.num_witnesses, 2);
        assert_eq!(cfg.traffic.retry_limit, 2);
        assert_eq!(cfg.traffic.per_device_rate_tps, None);
        assert_eq!(cfg.area_side_m, 100.0);
        assert_eq!(cfg.num_devices, 500);
        assert_eq!(cfg.radio.carrier_frequency_hz, 914e6);
        assert_eq!(cfg.radio.tx_power_w, 0.28183815);
        assert_eq!(cfg.radio.gain_tx, 1.0);
        assert_eq!(cfg.radio.gain_rx, 1.0);
        assert_eq!(cfg.radio.sensitivity_w, 3.652e-10);
        assert_eq!(cfg.radio.shadow_sigma_db, 6.0);
        assert_eq!(cfg.radio.path_loss_exponent, 3.0);
        assert_eq!(cfg.queue.block_size, 1000);
        assert_eq!(cfg.queue.block_rate_bps, 1.8e-3);
        assert_eq!(cfg.distance_floor_m, 1.0);
        assert_eq!(cfg.deployment_replications, 1000);
        assert_eq!(cfg.registration_policy, RegistrationPolicy::UniformRandom);
    }

    #[test]
    fn rejects_shallow_path_loss() {
        let err = parse_config("num_witnesses=2\npath_loss_exponent=1.5").unwrap_err();
        assert!(
            matches!(err, ConfigError::InvariantViolation { ref field, .. } if field == "path_loss_exponent")
        );
    }

    #[test]
    fn rejects_retry_limit_above_witness_count() {
        let err = parse_config("num_witnesses=3\nretry_limit=4").unwrap_err();
        assert!(
            matches!(err, ConfigError::InvariantViolation { ref field, .. } if field == "retry_limit")
        );
        assert!(parse_config("num_witnesses=3\nretry_limit=0").is_err());
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        assert_eq!(
            parse_config("num_witnesses=2\nwarp_factor=9").unwrap_err(),
            ConfigError::UnknownKey("warp_factor".into())
        );
        assert_eq!(
            parse_config("[RadioParams]\nnum_witnesses=2").unwrap_err(),
            ConfigError::UnknownKey("RadioParams.num_witnesses".into())
        );
    }

    #[test]
    fn syntax_errors_are_malformed() {
        assert!(matches!(
            parse_config("num_witnesses 2").unwrap_err(),
            ConfigError::MalformedInput { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("num_witnesses=two").unwrap_err(),
            ConfigError::MalformedInput { .. }
        ));
        assert!(matches!(
            parse_config("[radio\nnum_witnesses=2").unwrap_err(),
            ConfigError::MalformedInput { line: 1, .. }
        ));
        assert!(matches!(
            parse_config("num_witnesses=2\nnum_witnesses=3").unwrap_err(),
            ConfigError::MalformedInput { line: 2, .. }
        ));
        assert!(matches!(
            parse_config("{ \"num_witnesses\": 2,").unwrap_err(),
            ConfigError::MalformedInput { .. }
        ));
    }

    #[test]
    fn emitted_text_names_device_count_and_seed() {
        let mut cfg = ScenarioConfig::with_witnesses(4);
        cfg.rng_seed = 42;
        let text = emit_config(&cfg);
        assert!(text.contains("num_devices=500"));
        assert!(text.contains("rng_seed=42"));
        assert!(text.contains("[QueueParams]"));
    }

    #[test]
    fn json_document_accepted() {
        let cfg = parse_config(
            r#"{ "num_witnesses": 3, "radio": { "shadow_sigma_db": 8 },
                 "traffic": { "per_device_rate_tps": 0.002 }, "registration_policy": "nearest" }"#,
        )
        .unwrap();
        assert_eq!(cfg.num_witnesses, 3);
        assert_eq!(cfg.radio.shadow_sigma_db, 8.0);
        assert_eq!(cfg.traffic.per_device_rate_tps, Some(0.002));
        assert_eq!(cfg.registration_policy, RegistrationPolicy::Nearest);
        assert_eq!(
            parse_config(r#"{ "num_witnesses": 3, "radio": { "block_size": 8 } }"#).unwrap_err(),
            ConfigError::UnknownKey("radio.block_size".into())
        );
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut raw = parse_raw("num_witnesses=2\nblock_size=10").unwrap();
        raw.apply_override("block_size=20").unwrap();
        raw.apply_override("num_witnesses=5").unwrap();
        let cfg = raw.resolve().unwrap();
        assert_eq!(cfg.queue.block_size, 20);
        assert_eq!(cfg.traffic.retry_limit, 5);
        assert!(raw.apply_override("nope=1").is_err());
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            1usize..12,
            1usize..5000,
            1e-3f64..1e4,
            proptest::option::of(0.0f64..10.0),
            2.0f64..6.0,
            any::<u64>(),
            1usize..3000,
            (1e-6f64..1e3, 1e-6f64..1e3, 1e-9f64..1.0),
            any::<bool>(),
        )
            .prop_flat_map(
                |(v, k, side, rate, beta, seed, b, (mu1, mu2, mub), nearest)| {
                    (1..=v).prop_map(move |l| {
                        let mut cfg = ScenarioConfig::with_witnesses(v);
                        cfg.num_devices = k;
                        cfg.area_side_m = side;
                        cfg.traffic.per_device_rate_tps = rate;
                        cfg.traffic.retry_limit = l;
                        cfg.radio.path_loss_exponent = beta;
                        cfg.rng_seed = seed;
                        cfg.queue = QueueParams {
                            mu1_tps: mu1,
                            mu2_tps: mu2,
                            block_size: b,
                            block_rate_bps: mub,
                        };
                        if nearest {
                            cfg.registration_policy = RegistrationPolicy::Nearest;
                        }
                        cfg
                    })
                },
            )
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in arb_config()) {
            prop_assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
        }

        #[test]
        fn json_round_trip(cfg in arb_config()) {
            prop_assert_eq!(parse_config(&emit_config_json(&cfg)).unwrap(), cfg);
        }
    }
}
