//! Network model: physical/protocol parameters, derived quantities and
//! configuration validation.
//!
//! All densities are per square metre and all powers are dBm at the
//! configuration surface; internal math works with linear power ratios
//! normalized by the IoT transmit power.

use crate::real::Real;
use thiserror::Error;

/// Uplink access protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Single multiplexing band, every base station listens to it.
    Existing,
    /// M bands, every base station listens to all of them.
    Benchmark,
    /// M bands; a device keeps one band for all repetitions, each base
    /// station listens to a single band.
    SlottedMultiband,
    /// M bands; every repetition may use a different band, each base
    /// station listens to a single band.
    UnslottedMultiband,
}

impl ProtocolKind {
    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::Existing => "existing",
            ProtocolKind::Benchmark => "benchmark",
            ProtocolKind::SlottedMultiband => "slotted-mb",
            ProtocolKind::UnslottedMultiband => "unslotted-mb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "existing" | "single-band" => Some(ProtocolKind::Existing),
            "benchmark" => Some(ProtocolKind::Benchmark),
            "slotted-mb" | "slotted-multiband" => Some(ProtocolKind::SlottedMultiband),
            "unslotted-mb" | "unslotted-multiband" => Some(ProtocolKind::UnslottedMultiband),
            _ => None,
        }
    }
}

/// How the N copies of a message pick their channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepetitionScheme {
    /// Fresh channel per copy: the interfering device set refreshes per copy.
    Random,
    /// Predetermined hopping sequence: one interfering device set persists
    /// across all copies.
    Pn,
}

impl RepetitionScheme {
    pub fn label(self) -> &'static str {
        match self {
            RepetitionScheme::Random => "random",
            RepetitionScheme::Pn => "pn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(RepetitionScheme::Random),
            "pn" | "pseudorandom" => Some(RepetitionScheme::Pn),
            _ => None,
        }
    }
}

/// Which base stations count for a successful decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Association {
    /// Any listening base station may decode any copy.
    NoAssociation,
    /// Only the nearest listening base station counts.
    NearestBs,
}

impl Association {
    pub fn label(self) -> &'static str {
        match self {
            Association::NoAssociation => "none",
            Association::NearestBs => "nearest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" | "no-association" => Some(Association::NoAssociation),
            "nearest" | "nearest-bs" => Some(Association::NearestBs),
            _ => None,
        }
    }
}

/// Physical and protocol parameters.
///
/// Densities are per m²; `tau` is the linear SINR decoding threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig<F: Real = f64> {
    /// Base-station density.
    pub lambda_bs: F,
    /// IoT device density.
    pub lambda_iot: F,
    /// Incumbent effective density (temporal activity already folded in).
    pub lambda_inc: F,
    pub p_iot_dbm: F,
    pub p_inc_dbm: F,
    /// Noise power over one signal bandwidth `b_hz`.
    pub p_noise_dbm: F,
    /// IoT signal bandwidth.
    pub b_hz: F,
    /// One multiplexing band.
    pub band_hz: F,
    /// Incumbent signal bandwidth.
    pub inc_band_hz: F,
    /// Number of multiplexing bands M.
    pub bands: u32,
    /// Number of repetitions N per message.
    pub repetitions: u32,
    /// Duration of a single message copy.
    pub t_s: F,
    /// Period between messages.
    pub period_s: F,
    /// Path-loss exponent.
    pub alpha: F,
    /// Time access factor: 1 = slotted, 2 = unslotted.
    pub beta_t: F,
    /// Frequency access factor: 1 = slotted, 2 = unslotted.
    pub beta_f: F,
    /// SINR decoding threshold (linear).
    pub tau: F,
}

impl<F: Real> NetworkConfig<F> {
    /// Temporal traffic ratio t/T.
    pub fn traffic_ratio(&self) -> F {
        self.t_s / self.period_s
    }

    pub fn with_lambda_iot(&self, lambda_iot: F) -> Self {
        let mut c = self.clone();
        c.lambda_iot = lambda_iot;
        c
    }

    pub fn with_tau(&self, tau: F) -> Self {
        let mut c = self.clone();
        c.tau = tau;
        c
    }

    pub fn with_bands(&self, bands: u32) -> Self {
        let mut c = self.clone();
        c.bands = bands;
        c
    }

    pub fn derived(&self) -> DerivedParams<F> {
        derive_params(self)
    }
}

/// Quantities derived from a [`NetworkConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedParams<F: Real = f64> {
    /// 2/alpha.
    pub delta: F,
    /// sin(pi*delta)/(delta*pi).
    pub xi: F,
    /// Incumbent power seen in one signal bandwidth, relative to IoT power.
    pub p_hat_inc: F,
    /// Noise power relative to IoT power.
    pub p_hat_noise: F,
    /// Density of IoT devices interfering with one message copy.
    pub lambda_iot_thinned: F,
    /// Density of incumbents interfering with one message copy.
    pub lambda_inc_thinned: F,
}

impl<F: Real> DerivedParams<F> {
    /// Combined interferer density `lambda_iot_thinned + p_hat_inc^delta *
    /// lambda_inc_thinned`, the denominator of every closed form.
    pub fn interference_density(&self) -> F {
        self.lambda_iot_thinned + self.p_hat_inc.powf(self.delta) * self.lambda_inc_thinned
    }
}

pub fn dbm_to_watts<F: Real>(dbm: F) -> F {
    let ten = F::of(10.0);
    ten.powf((dbm - F::of(30.0)) / ten)
}

pub fn watts_to_dbm<F: Real>(watts: F) -> F {
    let ten = F::of(10.0);
    ten * watts.log10() + F::of(30.0)
}

pub fn db_to_linear<F: Real>(db: F) -> F {
    let ten = F::of(10.0);
    ten.powf(db / ten)
}

pub fn linear_to_db<F: Real>(linear: F) -> F {
    F::of(10.0) * linear.log10()
}

/// Computes every derived quantity. Assumes a validated configuration.
pub fn derive_params<F: Real>(cfg: &NetworkConfig<F>) -> DerivedParams<F> {
    let delta = F::of(2.0) / cfg.alpha;
    let pi = F::PI();
    let xi = (pi * delta).sin() / (delta * pi);
    let p_iot_w = dbm_to_watts(cfg.p_iot_dbm);
    let p_hat_inc = dbm_to_watts(cfg.p_inc_dbm) * (cfg.b_hz / cfg.inc_band_hz) / p_iot_w;
    let p_hat_noise = dbm_to_watts(cfg.p_noise_dbm) / p_iot_w;
    let m_band = F::of_u32(cfg.bands) * cfg.band_hz;
    let lambda_iot_thinned = F::of_u32(cfg.repetitions)
        * cfg.beta_t
        * cfg.traffic_ratio()
        * (cfg.beta_f * cfg.b_hz / m_band)
        * cfg.lambda_iot;
    let lambda_inc_thinned = (cfg.inc_band_hz / m_band).min(F::one()) * cfg.lambda_inc;
    DerivedParams {
        delta,
        xi,
        p_hat_inc,
        p_hat_noise,
        lambda_iot_thinned,
        lambda_inc_thinned,
    }
}

/// Protocol selection: access scheme, repetition scheme, association rule and
/// the per-band listening probabilities of the base stations.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec<F: Real = f64> {
    pub kind: ProtocolKind,
    pub scheme: RepetitionScheme,
    pub association: Association,
    /// Probability that a base station listens to band m. Length must equal
    /// the configured number of bands; devices always pick bands uniformly.
    pub band_probs: Vec<F>,
}

impl<F: Real> ProtocolSpec<F> {
    /// Uniform band probabilities 1/M.
    pub fn uniform(
        kind: ProtocolKind,
        scheme: RepetitionScheme,
        association: Association,
        bands: u32,
    ) -> Self {
        let m = if kind == ProtocolKind::Existing { 1 } else { bands };
        let p = F::one() / F::of_u32(m);
        Self {
            kind,
            scheme,
            association,
            band_probs: vec![p; m as usize],
        }
    }

    pub fn is_uniform(&self) -> bool {
        let m = self.band_probs.len();
        if m == 0 {
            return false;
        }
        let target = 1.0 / m as f64;
        self.band_probs
            .iter()
            .all(|&p| (p.as_f64() - target).abs() <= 1e-9 * target)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("alpha must exceed 2 (got {alpha}): the interference integrals diverge otherwise")]
    AlphaTooSmall { alpha: f64 },
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("signal bandwidth b_hz ({b} Hz) must not exceed the band B_hz ({band} Hz)")]
    BandwidthOrder { b: f64, band: f64 },
    #[error("message duration t_s ({t} s) must not exceed the period T_s ({period} s)")]
    TimingOrder { t: f64, period: f64 },
    #[error("{field} must lie in [1, 2] (got {value})")]
    BetaOutOfRange { field: &'static str, value: f64 },
    #[error("band probabilities must be a simplex vector: sum {sum}, min entry {min}")]
    BandProbNotSimplex { sum: f64, min: f64 },
    #[error("band probability vector has length {got}, config has {expected} bands")]
    BandProbLength { expected: u32, got: usize },
    #[error("the existing protocol is single-band; config has {bands} bands")]
    ExistingWithMultipleBands { bands: u32 },
    #[error("repetitions must lie in 1..=64 (got {n})")]
    RepetitionsOutOfRange { n: u32 },
    #[error("number of bands must be at least 1 (got {m})")]
    BandsOutOfRange { m: u32 },
}

/// Checks every type invariant and reports all violations at once.
pub fn validate_config<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
) -> Result<(), Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut positive = |field: &'static str, value: F| {
        if !(value > F::zero()) {
            errors.push(ConfigError::NonPositive {
                field,
                value: value.as_f64(),
            });
        }
    };
    positive("b_hz", cfg.b_hz);
    positive("B_hz", cfg.band_hz);
    positive("B_inc_hz", cfg.inc_band_hz);
    positive("t_s", cfg.t_s);
    positive("T_s", cfg.period_s);
    positive("tau", cfg.tau);
    positive("lambda_bs", cfg.lambda_bs);
    let mut errors = errors; // release the closure borrow

    if !(cfg.alpha > F::of(2.0)) {
        errors.push(ConfigError::AlphaTooSmall {
            alpha: cfg.alpha.as_f64(),
        });
    }
    for (field, value) in [("lambda_iot", cfg.lambda_iot), ("lambda_inc", cfg.lambda_inc)] {
        if !(value >= F::zero()) {
            errors.push(ConfigError::Negative {
                field,
                value: value.as_f64(),
            });
        }
    }
    if cfg.b_hz > cfg.band_hz {
        errors.push(ConfigError::BandwidthOrder {
            b: cfg.b_hz.as_f64(),
            band: cfg.band_hz.as_f64(),
        });
    }
    if cfg.t_s > cfg.period_s {
        errors.push(ConfigError::TimingOrder {
            t: cfg.t_s.as_f64(),
            period: cfg.period_s.as_f64(),
        });
    }
    for (field, value) in [("beta_t", cfg.beta_t), ("beta_f", cfg.beta_f)] {
        if !(value >= F::one() && value <= F::of(2.0)) {
            errors.push(ConfigError::BetaOutOfRange {
                field,
                value: value.as_f64(),
            });
        }
    }
    if cfg.bands < 1 {
        errors.push(ConfigError::BandsOutOfRange { m: cfg.bands });
    }
    if cfg.repetitions < 1 || cfg.repetitions > 64 {
        errors.push(ConfigError::RepetitionsOutOfRange {
            n: cfg.repetitions,
        });
    }
    if spec.kind == ProtocolKind::Existing && cfg.bands != 1 {
        errors.push(ConfigError::ExistingWithMultipleBands { bands: cfg.bands });
    }
    if spec.band_probs.len() != cfg.bands as usize {
        errors.push(ConfigError::BandProbLength {
            expected: cfg.bands,
            got: spec.band_probs.len(),
        });
    } else {
        let sum: f64 = spec.band_probs.iter().map(|p| p.as_f64()).sum();
        let min = spec
            .band_probs
            .iter()
            .map(|p| p.as_f64())
            .fold(f64::INFINITY, f64::min);
        if (sum - 1.0).abs() > 1e-9 || min < 0.0 {
            errors.push(ConfigError::BandProbNotSimplex { sum, min });
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::presets;
    use approx::assert_relative_eq;

    #[test]
    fn table2_with_benchmark_uniform_is_valid() {
        let cfg = presets::table2();
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Benchmark,
            RepetitionScheme::Random,
            Association::NoAssociation,
            cfg.bands,
        );
        assert_eq!(spec.band_probs, vec![0.2; 5]);
        validate_config(&cfg, &spec).expect("Table II config must validate");
    }

    #[test]
    fn alpha_at_two_is_rejected() {
        let mut cfg = presets::table2();
        cfg.alpha = 2.0;
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Benchmark,
            RepetitionScheme::Random,
            Association::NoAssociation,
            cfg.bands,
        );
        let errs = validate_config(&cfg, &spec).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigError::AlphaTooSmall { .. })));
    }

    #[test]
    fn non_simplex_band_probs_rejected() {
        let mut cfg = presets::table2();
        cfg.bands = 2;
        let spec = ProtocolSpec {
            kind: ProtocolKind::SlottedMultiband,
            scheme: RepetitionScheme::Random,
            association: Association::NoAssociation,
            band_probs: vec![0.6, 0.6],
        };
        let errs = validate_config(&cfg, &spec).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigError::BandProbNotSimplex { .. })));
    }

    #[test]
    fn existing_requires_single_band() {
        let cfg = presets::table2(); // M = 5
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Existing,
            RepetitionScheme::Random,
            Association::NoAssociation,
            cfg.bands,
        );
        let errs = validate_config(&cfg, &spec).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ConfigError::ExistingWithMultipleBands { .. })));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut cfg = presets::table2();
        cfg.alpha = 1.5;
        cfg.tau = -1.0;
        cfg.lambda_iot = -2.0;
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Benchmark,
            RepetitionScheme::Random,
            Association::NoAssociation,
            cfg.bands,
        );
        let errs = validate_config(&cfg, &spec).unwrap_err();
        assert!(errs.len() >= 3, "expected all violations, got {errs:?}");
    }

    #[test]
    fn delta_and_xi_at_alpha_four() {
        let mut cfg = presets::table2();
        cfg.alpha = 4.0;
        let d = cfg.derived();
        assert_eq!(d.delta, 0.5);
        // xi = sin(pi/2)/(pi/2) = 2/pi
        assert_relative_eq!(d.xi, 2.0 / std::f64::consts::PI, max_relative = 1e-15);
    }

    #[test]
    fn incumbent_power_ratio_from_table2() {
        // Equal transmit powers reduce the ratio to b/B_inc = 600/125000.
        let d = presets::table2().derived();
        assert_relative_eq!(d.p_hat_inc, 4.8e-3, max_relative = 1e-12);
        assert_relative_eq!(d.p_hat_noise, 1e-16, max_relative = 1e-10);
    }

    #[test]
    fn thinned_density_is_zero_for_empty_iot_process() {
        let mut cfg = presets::table2();
        cfg.repetitions = 1;
        cfg.beta_t = 1.0;
        cfg.beta_f = 1.0;
        cfg.bands = 1;
        cfg.lambda_iot = 0.0;
        assert_eq!(cfg.derived().lambda_iot_thinned, 0.0);
    }

    #[test]
    fn thinned_density_scales_linearly_in_each_factor() {
        let base = presets::table2();
        let d0 = base.derived().lambda_iot_thinned;
        let mut c = base.clone();
        c.repetitions *= 2;
        assert_relative_eq!(c.derived().lambda_iot_thinned, 2.0 * d0, max_relative = 1e-12);
        let mut c = base.clone();
        c.lambda_iot *= 3.0;
        assert_relative_eq!(c.derived().lambda_iot_thinned, 3.0 * d0, max_relative = 1e-12);
        let mut c = base.clone();
        c.beta_t = 1.0; // halves the default 2.0
        assert_relative_eq!(c.derived().lambda_iot_thinned, 0.5 * d0, max_relative = 1e-12);
        let mut c = base.clone();
        c.beta_f = 1.0;
        assert_relative_eq!(c.derived().lambda_iot_thinned, 0.5 * d0, max_relative = 1e-12);
        // inversely proportional to M*B
        let mut c = base.clone();
        c.bands = 10;
        assert_relative_eq!(c.derived().lambda_iot_thinned, 0.5 * d0, max_relative = 1e-12);
    }

    #[test]
    fn incumbent_thinning_breaks_at_band_count_covering_inc_bandwidth() {
        // Choose B so that M*B crosses B_inc at M = 4.
        let mut cfg = presets::table2();
        cfg.band_hz = 31_250.0; // B_inc = 125 kHz = 4 * B
        cfg.lambda_inc = 1.0;
        for m in 1..=4 {
            cfg.bands = m;
            assert_eq!(cfg.derived().lambda_inc_thinned, 1.0, "M={m}");
        }
        cfg.bands = 5;
        assert_relative_eq!(cfg.derived().lambda_inc_thinned, 0.8, max_relative = 1e-12);
        cfg.bands = 8;
        assert_relative_eq!(cfg.derived().lambda_inc_thinned, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-146.0, -30.0, 0.0, 14.0, 46.5] {
            let w = dbm_to_watts(dbm);
            assert_relative_eq!(watts_to_dbm(w), dbm, max_relative = 1e-12);
        }
    }

    #[test]
    fn slotted_time_and_slotted_frequency_thin_identically() {
        // beta products are powers of two, so the two orderings are bit-equal.
        let mut a = presets::table2();
        a.beta_t = 1.0;
        a.beta_f = 2.0;
        let mut b = presets::table2();
        b.beta_t = 2.0;
        b.beta_f = 1.0;
        assert_eq!(
            a.derived().lambda_iot_thinned,
            b.derived().lambda_iot_thinned
        );
    }

    #[test]
    fn generic_f32_derivation_matches_f64() {
        let c64 = presets::table2();
        let c32 = NetworkConfig::<f32> {
            lambda_bs: c64.lambda_bs as f32,
            lambda_iot: c64.lambda_iot as f32,
            lambda_inc: c64.lambda_inc as f32,
            p_iot_dbm: 14.0,
            p_inc_dbm: 14.0,
            p_noise_dbm: -146.0,
            b_hz: 600.0,
            band_hz: 2e5,
            inc_band_hz: 1.25e5,
            bands: 5,
            repetitions: 3,
            t_s: 0.347,
            period_s: c64.period_s as f32,
            alpha: 3.5,
            beta_t: 2.0,
            beta_f: 2.0,
            tau: c64.tau as f32,
        };
        let d32 = c32.derived();
        let d64 = c64.derived();
        assert!((d32.delta as f64 - d64.delta).abs() < 1e-6);
        assert!((d32.xi as f64 - d64.xi).abs() < 1e-6);
        assert!(
            (d32.lambda_iot_thinned as f64 - d64.lambda_iot_thinned).abs()
                < 1e-6 * d64.lambda_iot_thinned
        );
    }
}
