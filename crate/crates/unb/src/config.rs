//! Flat key/value configuration files and the canonical parameter presets.
//!
//! File format: one `key = value` pair per line, `#` starts a comment.
//! Densities are given per km² in files and converted to per m² when a
//! [`NetworkConfig`] is built; every other unit matches the struct fields
//! (Hz, seconds, dBm, linear SINR threshold).

use crate::model::NetworkConfig;
use crate::real::Real;
use thiserror::Error;

/// File keys in canonical order.
pub const CONFIG_KEYS: [&str; 17] = [
    "lambda_bs",
    "lambda_iot",
    "lambda_inc",
    "p_iot_dbm",
    "p_inc_dbm",
    "p_noise_dbm",
    "b_hz",
    "B_hz",
    "B_inc_hz",
    "M",
    "N",
    "t_s",
    "T_s",
    "alpha",
    "beta_t",
    "beta_f",
    "tau",
];

const DENSITY_KEYS: [&str; 3] = ["lambda_bs", "lambda_iot", "lambda_inc"];
const INTEGER_KEYS: [&str; 2] = ["M", "N"];

/// Per-km² to per-m².
const KM2_TO_M2: f64 = 1e-6;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigFileError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown key `{key}`")]
    UnknownOverrideKey { key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{key}` has unparsable value `{value}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("missing keys: {keys}")]
    MissingKeys { keys: String },
    #[error("`{key}` must be a non-negative integer (got {value})")]
    NotAnInteger { key: String, value: f64 },
}

/// Ordered key/value view of a configuration, in file units.
///
/// Overrides and `--dump-config` operate on this map so that values
/// round-trip exactly through printing and re-parsing.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigMap {
    entries: Vec<(String, f64)>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        let mut map = ConfigMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigFileError::Malformed {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigFileError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if map.get(key).is_some() {
                return Err(ConfigFileError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| ConfigFileError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            map.entries.push((key.to_string(), parsed));
        }
        Ok(map)
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| *v)
    }

    /// Sets a known key, replacing any existing value.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ConfigFileError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigFileError::UnknownOverrideKey {
                key: key.to_string(),
            });
        }
        if let Some(entry) = self.entries.iter_mut().find(|(k, _)| k == key) {
            entry.1 = value;
        } else {
            self.entries.push((key.to_string(), value));
        }
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, expr: &str) -> Result<(), ConfigFileError> {
        let Some((key, value)) = expr.split_once('=') else {
            return Err(ConfigFileError::Malformed {
                line: 0,
                text: expr.to_string(),
            });
        };
        let key = key.trim();
        let parsed: f64 = value
            .trim()
            .parse()
            .map_err(|_| ConfigFileError::BadValue {
                line: 0,
                key: key.to_string(),
                value: value.trim().to_string(),
            })?;
        self.set(key, parsed)
    }

    /// Renders in canonical key order; shortest f64 representation so that
    /// printing and re-parsing is the identity.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            if let Some(v) = self.get(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        out
    }

    /// Builds the validated-unit config (per-m² densities, integer counts).
    pub fn to_network_config<F: Real>(&self) -> Result<NetworkConfig<F>, ConfigFileError> {
        let missing: Vec<&str> = CONFIG_KEYS
            .iter()
            .copied()
            .filter(|k| self.get(k).is_none())
            .collect();
        if !missing.is_empty() {
            return Err(ConfigFileError::MissingKeys {
                keys: missing.join(", "),
            });
        }
        let f = |key: &str| -> f64 {
            let v = self.get(key).unwrap();
            if DENSITY_KEYS.contains(&key) {
                v * KM2_TO_M2
            } else {
                v
            }
        };
        let int = |key: &str| -> Result<u32, ConfigFileError> {
            let v = self.get(key).unwrap();
            if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                return Err(ConfigFileError::NotAnInteger {
                    key: key.to_string(),
                    value: v,
                });
            }
            Ok(v as u32)
        };
        let _ = INTEGER_KEYS; // names listed above for documentation
        Ok(NetworkConfig {
            lambda_bs: F::of(f("lambda_bs")),
            lambda_iot: F::of(f("lambda_iot")),
            lambda_inc: F::of(f("lambda_inc")),
            p_iot_dbm: F::of(f("p_iot_dbm")),
            p_inc_dbm: F::of(f("p_inc_dbm")),
            p_noise_dbm: F::of(f("p_noise_dbm")),
            b_hz: F::of(f("b_hz")),
            band_hz: F::of(f("B_hz")),
            inc_band_hz: F::of(f("B_inc_hz")),
            bands: int("M")?,
            repetitions: int("N")?,
            t_s: F::of(f("t_s")),
            period_s: F::of(f("T_s")),
            alpha: F::of(f("alpha")),
            beta_t: F::of(f("beta_t")),
            beta_f: F::of(f("beta_f")),
            tau: F::of(f("tau")),
        })
    }
}

impl Default for ConfigMap {
    fn default() -> Self {
        Self::new()
    }
}

/// Canonical parameter presets used by the experiments and shipped as
/// `table2.cfg`.
pub mod presets {
    use super::ConfigMap;
    use crate::model::NetworkConfig;

    /// Messages per period: 6 messages/hour at 347 ms each.
    pub const TRAFFIC_RATIO: f64 = 2.8e-3;

    /// Canonical deployment: 25 base stations over a 25 km x 25 km region.
    pub const AREA_M2: f64 = 625e6;
    pub const LAMBDA_BS_PER_M2: f64 = 25.0 / AREA_M2;

    /// IoT devices per base station.
    pub const IOT_PER_BS: f64 = 50e3;
    /// Incumbents per base station in the default (low-density) setting.
    pub const INC_PER_BS_LOW: f64 = 1e3;

    /// Default SINR threshold: 5 dB.
    pub const TAU_DEFAULT: f64 = 3.1622776601683795;

    /// File-unit map of the main parameter table.
    pub fn table2_map() -> ConfigMap {
        let mut m = ConfigMap::new();
        let lambda_bs_km2 = LAMBDA_BS_PER_M2 * 1e6;
        let pairs: [(&str, f64); 17] = [
            ("lambda_bs", lambda_bs_km2),
            ("lambda_iot", IOT_PER_BS * lambda_bs_km2),
            // Effective density: incumbents per BS times their temporal activity.
            ("lambda_inc", INC_PER_BS_LOW * TRAFFIC_RATIO * lambda_bs_km2),
            ("p_iot_dbm", 14.0),
            ("p_inc_dbm", 14.0),
            ("p_noise_dbm", -146.0),
            ("b_hz", 600.0),
            ("B_hz", 200e3),
            ("B_inc_hz", 125e3),
            ("M", 5.0),
            ("N", 3.0),
            ("t_s", 0.347),
            ("T_s", 0.347 / TRAFFIC_RATIO),
            ("alpha", 3.5),
            ("beta_t", 2.0),
            ("beta_f", 2.0),
            ("tau", TAU_DEFAULT),
        ];
        for (k, v) in pairs {
            m.set(k, v).unwrap();
        }
        m
    }

    pub fn table2() -> NetworkConfig<f64> {
        table2_map().to_network_config().unwrap()
    }

    /// Replaces the incumbent effective density with `per_bs` incumbents per
    /// base station (temporal activity folded in).
    pub fn set_incumbents_per_bs(map: &mut ConfigMap, per_bs: f64) {
        let lambda_bs = map.get("lambda_bs").unwrap();
        let ratio = map.get("t_s").unwrap() / map.get("T_s").unwrap();
        map.set("lambda_inc", per_bs * ratio * lambda_bs).unwrap();
    }

    /// High incumbent density: as many incumbents as IoT devices.
    pub fn set_high_incumbent_density(map: &mut ConfigMap) {
        let lambda_bs = map.get("lambda_bs").unwrap();
        let per_bs = map.get("lambda_iot").unwrap() / lambda_bs;
        set_incumbents_per_bs(map, per_bs);
    }
}
