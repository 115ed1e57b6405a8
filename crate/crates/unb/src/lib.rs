//! Analysis toolkit for ultra-narrowband (UNB) IoT spectrum sharing.
//!
//! The crate models a large-scale UNB uplink — Poisson fields of base
//! stations, IoT devices and wideband incumbents with Rayleigh fading — and
//! provides:
//!
//! - closed-form success probabilities and transmission capacities for the
//!   single-band, benchmark and multiband access protocols
//!   ([`analytic`]);
//! - a deterministic Monte-Carlo engine on a torus that estimates the same
//!   quantities from sampled realizations ([`sim`]);
//! - parameter sweeps, figure presets and CSV/SVG emission
//!   ([`experiments`]);
//! - a self-validation suite that cross-checks the closed forms against
//!   quadrature and simulation ([`checks`]).
//!
//! Core math is generic over the scalar type via [`real::Real`]; the default
//! type parameter on the public types is `f64`, with `f32` aliases below.

pub mod analytic;
pub mod checks;
pub mod sim;
pub mod config;
pub mod model;
pub mod real;

pub use analytic::{
    capacity_closed_form, capacity_numeric, enumerate_compositions, harmonic_number,
    success_given_allocation, success_probability, Allocation, AnalyticError, CapacityOutcome,
    CapacityQuery,
};
pub use config::{ConfigFileError, ConfigMap};
pub use model::{
    derive_params, validate_config, Association, ConfigError, DerivedParams, NetworkConfig,
    ProtocolKind, ProtocolSpec, RepetitionScheme,
};
pub use real::Real;
pub use sim::{estimate_success_probability, simulate_realization, sinr_cdf, Estimate, Realization, SimError, SimMode, SimOptions, SinrSample};

/// Single-precision aliases; the default type parameter selects `f64`.
pub type NetworkConfigF32 = NetworkConfig<f32>;
pub type DerivedParamsF32 = DerivedParams<f32>;
pub type ProtocolSpecF32 = ProtocolSpec<f32>;
