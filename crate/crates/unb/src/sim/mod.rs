//! Monte-Carlo engine.
//!
//! One realization drops the typical device at the centre of a square torus,
//! samples the base-station field and the interfering point sets for each of
//! the N copies, draws Rayleigh fading per link, and reports the SINR of
//! every (copy, listening station) pair. Estimates average an indicator over
//! independent realizations; every realization derives its RNG stream from
//! (master seed, realization index), so results do not depend on evaluation
//! order or worker count.
//!
//! Two fidelities: `Thinned` samples the interfering sets directly at the
//! thinned densities (a p-thinning of a Poisson process is a Poisson process
//! with scaled density), while `ExplicitSlots` simulates actual message
//! trains, start times and channel draws and lets collisions emerge from the
//! time/frequency overlap rules.

pub mod explicit;
pub mod geometry;
pub mod rng;

use crate::model::{Association, NetworkConfig, ProtocolKind, ProtocolSpec, RepetitionScheme};
use crate::real::Real;
use geometry::{exp1, nearest_listening_bs, sample_hppp, torus_dist2, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rng::{stream_rng, STREAM_REALIZATION};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("explicit-slots mode needs beta_t and beta_f in {{1, 2}} (got {bt}, {bf})")]
    FractionalBeta { bt: f64, bf: f64 },
    #[error("explicit-slots mode supports the random repetition scheme only")]
    ExplicitPn,
    #[error("transmissions mix slotted and unslotted coordinates in {0}")]
    MixedFidelity(&'static str),
    #[error("invalid simulation options: {0}")]
    InvalidOptions(String),
    #[error("tau grid must be non-empty, positive and ascending")]
    BadTauGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    /// Interfering sets sampled at the thinned densities.
    Thinned,
    /// Message trains, start times and channels simulated explicitly.
    ExplicitSlots,
}

/// Default master seed for presets and the CLI.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

/// Default torus side. Sized so that far-field truncation of the
/// interference (the torus only extends side/2 from the typical device)
/// stays well inside the Monte-Carlo confidence width at the canonical
/// parameter scale; the truncated Laplace exponent decays as side^(2-alpha).
pub const DEFAULT_TORUS_SIDE_M: f64 = 100_000.0;

/// Listening stations with per-copy decode exponent below exp(-K²) are
/// skipped in the no-association scan; K² = 10 keeps the omitted success
/// mass around 1e-4 of the total, far below one confidence width.
const LISTEN_RADIUS_K2: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions<F: Real = f64> {
    pub mode: SimMode,
    pub torus_side_m: F,
    pub realizations: u32,
    pub master_seed: u64,
    pub include_noise: bool,
}

impl<F: Real> Default for SimOptions<F> {
    fn default() -> Self {
        SimOptions {
            mode: SimMode::Thinned,
            torus_side_m: F::of(DEFAULT_TORUS_SIDE_M),
            realizations: 10_000,
            master_seed: DEFAULT_SEED,
            include_noise: false,
        }
    }
}

impl<F: Real> SimOptions<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.torus_side_m > F::zero()) {
            return Err(SimError::InvalidOptions(format!(
                "torus side must be positive (got {})",
                self.torus_side_m
            )));
        }
        if self.realizations < 1 {
            return Err(SimError::InvalidOptions(
                "realizations must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Non-fatal configuration smells.
    pub fn warnings(&self, cfg: &NetworkConfig<F>) -> Vec<String> {
        let mut w = Vec::new();
        let expected_bs = (cfg.lambda_bs * self.torus_side_m * self.torus_side_m).as_f64();
        if expected_bs < 20.0 {
            w.push(format!(
                "expected base-station count on the torus is only {expected_bs:.1}; \
                 estimates will be noisy (aim for >= 20)"
            ));
        }
        if self.realizations < 100 {
            w.push("fewer than 100 realizations: confidence intervals are unreliable".into());
        }
        w
    }
}

/// One sampled world: point sets and band assignments for a realization.
/// Fading is drawn during evaluation from the same stream.
#[derive(Clone, Debug)]
pub struct Realization<F: Real = f64> {
    pub bs: Vec<Point<F>>,
    /// Band listened to by each station (multiband single-listen protocols).
    pub bs_bands: Option<Vec<u16>>,
    /// Band carrying each copy of the typical message (empty when every
    /// station listens to the whole spectrum).
    pub typical_bands: Vec<u16>,
    /// Interfering IoT devices per copy (random repetition).
    pub iot_per_message: Vec<Vec<Point<F>>>,
    /// Interfering IoT devices shared by all copies (PN repetition).
    pub iot_shared: Option<Vec<Point<F>>>,
    /// Interfering incumbents per copy (always refreshed per copy).
    pub inc_per_message: Vec<Vec<Point<F>>>,
    /// Explicit-mode transmission descriptors of the retained interferers,
    /// aligned with `iot_per_message`.
    pub explicit_tx: Option<Vec<Vec<explicit::TxRecord<F>>>>,
}

/// SINR outcomes of one realization.
#[derive(Clone, Debug)]
pub struct SinrSample<F: Real = f64> {
    /// Per copy: (station index, linear SINR) over the stations that listen
    /// to that copy (a single entry under nearest-station association).
    pub per_message: Vec<Vec<(usize, F)>>,
    /// Largest SINR over all qualifying (copy, station) pairs;
    /// -inf when no station listens.
    pub max_sinr: F,
    /// max_sinr >= tau from the configuration.
    pub success: bool,
}

/// Mean success probability with a Wilson 95% confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<F: Real = f64> {
    pub value: F,
    pub ci_half: F,
    pub realizations: u32,
}

const WILSON_Z95: f64 = 1.959963984540054;

pub(crate) fn wilson_half_width(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let z = WILSON_Z95;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom
}

fn torus_center<F: Real>(side: F) -> Point<F> {
    Point {
        x: side / F::of(2.0),
        y: side / F::of(2.0),
    }
}

fn wants_band_assignment(kind: ProtocolKind) -> bool {
    matches!(
        kind,
        ProtocolKind::SlottedMultiband | ProtocolKind::UnslottedMultiband
    )
}

pub(crate) fn draw_band<F: Real, R: Rng>(probs: &[F], rng: &mut R) -> u16 {
    let u = F::of(rng.gen::<f64>());
    let mut acc = F::zero();
    for (m, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return m as u16;
        }
    }
    (probs.len() - 1) as u16
}

impl<F: Real> Realization<F> {
    /// Samples one world in `Thinned` fidelity.
    ///
    /// Interfering sets are sampled directly at the thinned densities: per
    /// copy for random repetition (fresh interferer set each copy), once for
    /// PN (the same set persists across copies). Incumbent sets always
    /// refresh per copy.
    pub fn sample_thinned<R: Rng>(
        cfg: &NetworkConfig<F>,
        spec: &ProtocolSpec<F>,
        opts: &SimOptions<F>,
        rng: &mut R,
    ) -> Realization<F> {
        let side = opts.torus_side_m;
        let n = cfg.repetitions as usize;
        let d = cfg.derived();

        let bs = sample_hppp(cfg.lambda_bs, side, rng);
        let bs_bands = if wants_band_assignment(spec.kind) {
            Some(
                (0..bs.len())
                    .map(|_| draw_band(&spec.band_probs, rng))
                    .collect(),
            )
        } else {
            None
        };
        // Devices pick bands uniformly regardless of the station probabilities.
        let typical_bands: Vec<u16> = match spec.kind {
            ProtocolKind::SlottedMultiband => {
                let m = rng.gen_range(0..cfg.bands) as u16;
                vec![m; n]
            }
            ProtocolKind::UnslottedMultiband => (0..n)
                .map(|_| rng.gen_range(0..cfg.bands) as u16)
                .collect(),
            _ => Vec::new(),
        };

        let (iot_per_message, iot_shared) = match spec.scheme {
            RepetitionScheme::Random => (
                (0..n)
                    .map(|_| sample_hppp(d.lambda_iot_thinned, side, rng))
                    .collect(),
                None,
            ),
            RepetitionScheme::Pn => (
                Vec::new(),
                Some(sample_hppp(d.lambda_iot_thinned, side, rng)),
            ),
        };
        let inc_per_message = (0..n)
            .map(|_| sample_hppp(d.lambda_inc_thinned, side, rng))
            .collect();

        Realization {
            bs,
            bs_bands,
            typical_bands,
            iot_per_message,
            iot_shared,
            inc_per_message,
            explicit_tx: None,
        }
    }

    /// Stations listening to copy `i`, honoring the band structure and the
    /// no-association listening radius (`None` keeps everything).
    fn listening_for_copy(
        &self,
        spec: &ProtocolSpec<F>,
        copy: usize,
        origin: Point<F>,
        side: F,
        radius2: Option<F>,
    ) -> Vec<usize> {
        match spec.association {
            Association::NearestBs => {
                let bands = self
                    .bs_bands
                    .as_ref()
                    .map(|b| (b.as_slice(), self.typical_bands[copy]));
                nearest_listening_bs(origin, &self.bs, bands, side)
                    .map(|j| vec![j])
                    .unwrap_or_default()
            }
            Association::NoAssociation => (0..self.bs.len())
                .filter(|&j| {
                    if let Some(bands) = &self.bs_bands {
                        if bands[j] != self.typical_bands[copy] {
                            return false;
                        }
                    }
                    match radius2 {
                        Some(r2) => torus_dist2(origin, self.bs[j], side) <= r2,
                        None => true,
                    }
                })
                .collect(),
        }
    }

    /// Draws fading and computes every qualifying SINR. `tau_min` bounds the
    /// listening radius; pass the smallest threshold that will be applied to
    /// the sample.
    pub fn evaluate<R: Rng>(
        &self,
        cfg: &NetworkConfig<F>,
        spec: &ProtocolSpec<F>,
        opts: &SimOptions<F>,
        tau_min: F,
        rng: &mut R,
    ) -> SinrSample<F> {
        let side = opts.torus_side_m;
        let origin = torus_center(side);
        let n = cfg.repetitions as usize;
        let d = cfg.derived();
        let p_inc = d.p_hat_inc;
        let noise = if opts.include_noise {
            d.p_hat_noise
        } else {
            F::zero()
        };
        let pow_exp = -cfg.alpha / F::of(2.0); // applied to squared distances

        let radius2 = match spec.association {
            Association::NearestBs => None,
            Association::NoAssociation => listening_radius2(cfg, tau_min),
        };
        let listening: Vec<Vec<usize>> = (0..n)
            .map(|i| self.listening_for_copy(spec, i, origin, side, radius2))
            .collect();

        // Serving path gains, lazily useful for every listening station.
        let x_pow: Vec<F> = self
            .bs
            .iter()
            .map(|&p| torus_dist2(origin, p, side).powf(pow_exp))
            .collect();

        // PN: one interfering set with one fading draw per (device, station)
        // pair, shared by all copies.
        let mut shared_interference: Vec<Option<F>> = Vec::new();
        if let Some(shared) = &self.iot_shared {
            shared_interference = vec![None; self.bs.len()];
            let mut union: Vec<usize> = listening.iter().flatten().copied().collect();
            union.sort_unstable();
            union.dedup();
            for &j in &union {
                let mut acc = F::zero();
                for &u in shared {
                    acc += exp1::<F, _>(rng) * torus_dist2(u, self.bs[j], side).powf(pow_exp);
                }
                shared_interference[j] = Some(acc);
            }
        }

        let mut per_message = Vec::with_capacity(n);
        let mut max_sinr = F::neg_infinity();
        for i in 0..n {
            let mut rows = Vec::with_capacity(listening[i].len());
            for &j in &listening[i] {
                let iot = match spec.scheme {
                    RepetitionScheme::Pn => {
                        shared_interference[j].expect("listening station precomputed")
                    }
                    RepetitionScheme::Random => {
                        let mut acc = F::zero();
                        for &u in &self.iot_per_message[i] {
                            acc +=
                                exp1::<F, _>(rng) * torus_dist2(u, self.bs[j], side).powf(pow_exp);
                        }
                        acc
                    }
                };
                let mut inc = F::zero();
                for &k in &self.inc_per_message[i] {
                    inc += exp1::<F, _>(rng) * torus_dist2(k, self.bs[j], side).powf(pow_exp);
                }
                let interference = noise + iot + p_inc * inc;
                let sinr = exp1::<F, _>(rng) * x_pow[j] / interference;
                if sinr > max_sinr {
                    max_sinr = sinr;
                }
                rows.push((j, sinr));
            }
            per_message.push(rows);
        }
        SinrSample {
            per_message,
            max_sinr,
            success: max_sinr >= cfg.tau,
        }
    }
}

/// No-association listening radius²: stations farther away have negligible
/// decode probability at the smallest applied threshold.
fn listening_radius2<F: Real>(cfg: &NetworkConfig<F>, tau_min: F) -> Option<F> {
    let d = cfg.derived();
    let total = d.lambda_iot_thinned + d.p_hat_inc.powf(d.delta) * d.lambda_inc_thinned;
    if !(total > F::zero()) || !(tau_min > F::zero()) {
        return None;
    }
    let c = F::PI() * tau_min.powf(d.delta) * total / d.xi;
    Some(F::of(LISTEN_RADIUS_K2) / c)
}

fn make_rng<F: Real>(opts: &SimOptions<F>, index: u32) -> ChaCha8Rng {
    stream_rng(opts.master_seed, STREAM_REALIZATION, index as u64)
}

fn sample_world<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    rng: &mut ChaCha8Rng,
) -> Result<Realization<F>, SimError> {
    match opts.mode {
        SimMode::Thinned => Ok(Realization::sample_thinned(cfg, spec, opts, rng)),
        SimMode::ExplicitSlots => explicit::sample_explicit(cfg, spec, opts, rng),
    }
}

/// Samples the world of realization `index` without evaluating SINRs.
pub fn sample_realization<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    index: u32,
) -> Result<Realization<F>, SimError> {
    opts.validate()?;
    let mut rng = make_rng(opts, index);
    sample_world(cfg, spec, opts, &mut rng)
}

/// Runs realization `index` end to end.
pub fn simulate_realization<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    index: u32,
) -> Result<SinrSample<F>, SimError> {
    opts.validate()?;
    let mut rng = make_rng(opts, index);
    let world = sample_world(cfg, spec, opts, &mut rng)?;
    Ok(world.evaluate(cfg, spec, opts, cfg.tau, &mut rng))
}

fn max_sinr_batch<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    tau_min: F,
) -> Result<Vec<F>, SimError> {
    opts.validate()?;
    (0..opts.realizations)
        .into_par_iter()
        .map(|index| {
            let mut rng = make_rng(opts, index);
            let world = sample_world(cfg, spec, opts, &mut rng)?;
            Ok(world.evaluate(cfg, spec, opts, tau_min, &mut rng).max_sinr)
        })
        .collect()
}

fn estimate_from_count<F: Real>(successes: u64, n: u32) -> Estimate<F> {
    Estimate {
        value: F::of(successes as f64 / n as f64),
        ci_half: F::of(wilson_half_width(successes, n as u64)),
        realizations: n,
    }
}

/// Sample mean of the success indicator at the configured threshold.
pub fn estimate_success_probability<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
) -> Result<Estimate<F>, SimError> {
    let maxes = max_sinr_batch(cfg, spec, opts, cfg.tau)?;
    let successes = maxes.iter().filter(|&&m| m >= cfg.tau).count() as u64;
    Ok(estimate_from_count(successes, opts.realizations))
}

/// Success probability across an ascending threshold grid, reusing one set
/// of realizations (the per-realization max SINR is thresholded), so the
/// output is non-increasing by construction.
pub fn sinr_cdf<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    tau_grid: &[F],
) -> Result<Vec<Estimate<F>>, SimError> {
    if tau_grid.is_empty()
        || !tau_grid.windows(2).all(|w| w[0] < w[1])
        || !(tau_grid[0] > F::zero())
    {
        return Err(SimError::BadTauGrid);
    }
    let mut maxes = max_sinr_batch(cfg, spec, opts, tau_grid[0])?;
    maxes.sort_unstable_by(|a, b| a.partial_cmp(b).expect("SINR is never NaN"));
    let n = opts.realizations;
    Ok(tau_grid
        .iter()
        .map(|&tau| {
            let below = maxes.partition_point(|&m| m < tau);
            estimate_from_count((maxes.len() - below) as u64, n)
        })
        .collect())
}

pub use explicit::{explicit_overlap, FreqCoord, TimeCoord, Transmission, TxRecord};

#[cfg(test)]
mod tests;
