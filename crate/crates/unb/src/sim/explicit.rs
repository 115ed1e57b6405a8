//! Explicit time/frequency fidelity.
//!
//! Instead of sampling pre-thinned interferer sets, every IoT device gets a
//! real back-to-back train of N message copies with a uniform start in
//! [0, T) and a channel draw per copy; a device copy interferes with a
//! typical copy exactly when both the time windows and the channels overlap.
//! Incumbent activity is redrawn per copy (incumbent packets are short
//! relative to a UNB copy), with a uniformly placed occupied band of width
//! B_inc; a copy is hit when its channel falls inside that band.
//!
//! Supported: random repetition with slotted/unslotted endpoints
//! (beta = 1 or 2) per axis. PN sequences and fractional beta levels have no
//! explicit realization and are rejected.

use super::geometry::{sample_hppp, Point};
use super::{Realization, SimError, SimOptions};
use crate::model::{NetworkConfig, ProtocolKind, ProtocolSpec, RepetitionScheme};
use crate::real::Real;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Start of a transmission window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeCoord<F: Real = f64> {
    /// Start time in seconds (unslotted time).
    Continuous(F),
    /// Slot index (slotted time).
    Slot(u64),
}

/// Spectral position of a transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreqCoord<F: Real = f64> {
    /// Absolute centre frequency in Hz (unslotted frequency).
    Center(F),
    /// Absolute channel index (slotted frequency).
    Channel(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transmission<F: Real = f64> {
    pub time: TimeCoord<F>,
    pub freq: FreqCoord<F>,
}

/// Retained interferer descriptor, kept for inspection.
pub type TxRecord<F> = Transmission<F>;

/// Binary interference rule between two transmissions: overlap in time AND
/// in frequency. Unslotted axes use strict inequalities (|dt| < t, |df| < b);
/// slotted axes require equal indices.
pub fn explicit_overlap<F: Real>(
    cfg: &NetworkConfig<F>,
    a: &Transmission<F>,
    b: &Transmission<F>,
) -> Result<bool, SimError> {
    let time = match (a.time, b.time) {
        (TimeCoord::Continuous(ta), TimeCoord::Continuous(tb)) => (ta - tb).abs() < cfg.t_s,
        (TimeCoord::Slot(sa), TimeCoord::Slot(sb)) => sa == sb,
        _ => return Err(SimError::MixedFidelity("time coordinates")),
    };
    if !time {
        return Ok(false);
    }
    let freq = match (a.freq, b.freq) {
        (FreqCoord::Center(fa), FreqCoord::Center(fb)) => (fa - fb).abs() < cfg.b_hz,
        (FreqCoord::Channel(ca), FreqCoord::Channel(cb)) => ca == cb,
        _ => return Err(SimError::MixedFidelity("frequency coordinates")),
    };
    Ok(freq)
}

fn beta_kind<F: Real>(beta: F) -> Option<bool> {
    // true = slotted
    if beta == F::one() {
        Some(true)
    } else if beta == F::of(2.0) {
        Some(false)
    } else {
        None
    }
}

/// Signed circular difference in (-period/2, period/2].
fn circ_diff<F: Real>(a: F, b: F, period: F) -> F {
    let mut d = (a - b) % period;
    let half = period / F::of(2.0);
    if d > half {
        d -= period;
    }
    if d <= -half {
        d += period;
    }
    d
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

struct FreqPlan<F: Real> {
    slotted: bool,
    /// channels per band (slotted only)
    channels_per_band: u64,
    band_hz: F,
    b_hz: F,
    bands: u32,
}

impl<F: Real> FreqPlan<F> {
    fn draw<R: Rng>(&self, band: u16, rng: &mut R) -> FreqCoord<F> {
        if self.slotted {
            let ch = rng.gen_range(0..self.channels_per_band);
            FreqCoord::Channel(band as u64 * self.channels_per_band + ch)
        } else {
            let offset = F::of(rng.gen::<f64>()) * self.band_hz;
            FreqCoord::Center(F::of_u32(band as u32) * self.band_hz + offset)
        }
    }

    /// Absolute frequency used for the incumbent-band hit test.
    fn absolute_hz(&self, f: FreqCoord<F>) -> F {
        match f {
            FreqCoord::Center(hz) => hz,
            FreqCoord::Channel(ch) => {
                // channel centres at (ch + 1/2) * b within the full spectrum
                (F::of(ch as f64) + F::of(0.5)) * self.b_hz
            }
        }
    }

    fn band_of(&self, f: FreqCoord<F>) -> u16 {
        match f {
            FreqCoord::Center(hz) => {
                let b = (hz / self.band_hz).floor().as_f64() as i64;
                b.clamp(0, self.bands as i64 - 1) as u16
            }
            FreqCoord::Channel(ch) => (ch / self.channels_per_band) as u16,
        }
    }
}

/// Samples one world with explicit trains and channel draws.
pub fn sample_explicit<F: Real, R: Rng>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    opts: &SimOptions<F>,
    rng: &mut R,
) -> Result<Realization<F>, SimError> {
    let (Some(time_slotted), Some(freq_slotted)) =
        (beta_kind(cfg.beta_t), beta_kind(cfg.beta_f))
    else {
        return Err(SimError::FractionalBeta {
            bt: cfg.beta_t.as_f64(),
            bf: cfg.beta_f.as_f64(),
        });
    };
    if spec.scheme != RepetitionScheme::Random {
        return Err(SimError::ExplicitPn);
    }

    let side = opts.torus_side_m;
    let n = cfg.repetitions as usize;
    let t = cfg.t_s;
    let period = cfg.period_s;
    let slots = (period / t).round().as_f64() as u64; // slotted time grid
    let freq = FreqPlan {
        slotted: freq_slotted,
        channels_per_band: (cfg.band_hz / cfg.b_hz).round().as_f64().max(1.0) as u64,
        band_hz: cfg.band_hz,
        b_hz: cfg.b_hz,
        bands: cfg.bands,
    };
    let spectrum = F::of_u32(cfg.bands) * cfg.band_hz;

    let bs = sample_hppp(cfg.lambda_bs, side, rng);
    let bs_bands = if matches!(
        spec.kind,
        ProtocolKind::SlottedMultiband | ProtocolKind::UnslottedMultiband
    ) {
        Some(
            (0..bs.len())
                .map(|_| super::draw_band(&spec.band_probs, rng))
                .collect::<Vec<u16>>(),
        )
    } else {
        None
    };

    // Typical device: copy i occupies slot i (or starts at i*t) on a channel
    // chosen per protocol; bands are uniform for the device side.
    let fixed_band = rng.gen_range(0..cfg.bands) as u16;
    let mut typical_tx: Vec<Transmission<F>> = Vec::with_capacity(n);
    let mut typical_bands_internal: Vec<u16> = Vec::with_capacity(n);
    for i in 0..n {
        let band = match spec.kind {
            ProtocolKind::SlottedMultiband => fixed_band,
            // per-copy band draw; for single-band or all-band listening the
            // channel still lands somewhere in the spectrum
            _ => rng.gen_range(0..cfg.bands) as u16,
        };
        typical_bands_internal.push(band);
        let time = if time_slotted {
            TimeCoord::Slot(i as u64)
        } else {
            TimeCoord::Continuous(F::of(i as f64) * t)
        };
        typical_tx.push(Transmission {
            time,
            freq: freq.draw(band, rng),
        });
    }

    // Interfering devices: full trains, lazily positioned.
    let mut iot_per_message: Vec<Vec<Point<F>>> = vec![Vec::new(); n];
    let mut explicit_tx: Vec<Vec<TxRecord<F>>> = vec![Vec::new(); n];
    let device_count = poisson_count((cfg.lambda_iot * side * side).as_f64(), rng);
    let n_u64 = n as u64;
    for _ in 0..device_count {
        let start_slot;
        let start_time;
        if time_slotted {
            start_slot = rng.gen_range(0..slots);
            start_time = F::zero();
            // quick reject: train slots [s, s+N) mod S must intersect [0, N)
            if start_slot >= n_u64 && start_slot + n_u64 <= slots {
                continue;
            }
        } else {
            start_slot = 0;
            start_time = F::of(rng.gen::<f64>()) * period;
            // quick reject: any copy-start pair closer than t needs
            // |start| < N*t circularly
            if circ_diff(start_time, F::zero(), period).abs() >= F::of_u32(n as u32) * t {
                continue;
            }
        }
        let mut channels: Vec<Option<Transmission<F>>> = vec![None; n];
        let mut position: Option<Point<F>> = None;
        for k in 0..n {
            // candidate typical copies overlapping device copy k in time
            let candidates: Vec<usize> = if time_slotted {
                let slot = (start_slot + k as u64) % slots;
                if slot < n_u64 {
                    vec![slot as usize]
                } else {
                    Vec::new()
                }
            } else {
                let r = start_time + F::of(k as f64) * t;
                (0..n)
                    .filter(|&i| circ_diff(r, F::of(i as f64) * t, period).abs() < t)
                    .collect()
            };
            if candidates.is_empty() {
                continue;
            }
            if channels[k].is_none() {
                let band = rng.gen_range(0..cfg.bands) as u16;
                let time = if time_slotted {
                    TimeCoord::Slot((start_slot + k as u64) % slots)
                } else {
                    TimeCoord::Continuous(start_time + F::of(k as f64) * t)
                };
                channels[k] = Some(Transmission {
                    time,
                    freq: freq.draw(band, rng),
                });
            }
            let dev_tx = channels[k].unwrap();
            for i in candidates {
                // same-band requirement mirrors the per-band thinning model
                if freq.band_of(dev_tx.freq) != freq.band_of(typical_tx[i].freq) {
                    continue;
                }
                // normalize the continuous start onto the image nearest the
                // typical copy before applying the plain |dt| < t rule
                let dev_for_cmp = match (dev_tx.time, typical_tx[i].time) {
                    (TimeCoord::Continuous(td), TimeCoord::Continuous(ti)) => Transmission {
                        time: TimeCoord::Continuous(ti + circ_diff(td, ti, period)),
                        freq: dev_tx.freq,
                    },
                    _ => dev_tx,
                };
                if explicit_overlap(cfg, &typical_tx[i], &dev_for_cmp)? {
                    let p = *position.get_or_insert_with(|| Point {
                        x: F::of(rng.gen::<f64>()) * side,
                        y: F::of(rng.gen::<f64>()) * side,
                    });
                    iot_per_message[i].push(p);
                    explicit_tx[i].push(dev_tx);
                }
            }
        }
    }

    // Incumbents: activity refreshes per copy; a copy is hit when its
    // channel lies inside the incumbent's occupied band (circular layout).
    let mut inc_per_message: Vec<Vec<Point<F>>> = vec![Vec::new(); n];
    for (i, tx) in typical_tx.iter().enumerate() {
        let f_abs = freq.absolute_hz(tx.freq);
        let count = poisson_count((cfg.lambda_inc * side * side).as_f64(), rng);
        for _ in 0..count {
            let g = F::of(rng.gen::<f64>()) * spectrum;
            let hit = if cfg.inc_band_hz >= spectrum {
                true
            } else {
                let mut d = (f_abs - g) % spectrum;
                if d < F::zero() {
                    d += spectrum;
                }
                d < cfg.inc_band_hz
            };
            if hit {
                inc_per_message[i].push(Point {
                    x: F::of(rng.gen::<f64>()) * side,
                    y: F::of(rng.gen::<f64>()) * side,
                });
            }
        }
    }

    let typical_bands = match spec.kind {
        ProtocolKind::SlottedMultiband | ProtocolKind::UnslottedMultiband => {
            typical_bands_internal
        }
        _ => Vec::new(),
    };

    Ok(Realization {
        bs,
        bs_bands,
        typical_bands,
        iot_per_message,
        iot_shared: None,
        inc_per_message,
        explicit_tx: Some(explicit_tx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::presets;
    use crate::model::Association;
    use crate::sim::rng::stream_rng;
    use crate::sim::SimMode;

    fn cfg() -> NetworkConfig<f64> {
        presets::table2().with_bands(1)
    }

    fn tx_c(start: f64, hz: f64) -> Transmission<f64> {
        Transmission {
            time: TimeCoord::Continuous(start),
            freq: FreqCoord::Center(hz),
        }
    }

    #[test]
    fn identical_start_and_channel_collide() {
        let cfg = cfg();
        let a = tx_c(1.0, 50e3);
        assert!(explicit_overlap(&cfg, &a, &a).unwrap());
    }

    #[test]
    fn touching_windows_do_not_collide() {
        let cfg = cfg();
        let a = tx_c(0.0, 50e3);
        let b = tx_c(cfg.t_s, 50e3); // |dt| = t exactly
        assert!(!explicit_overlap(&cfg, &a, &b).unwrap());
        let c = tx_c(cfg.t_s * 0.999, 50e3);
        assert!(explicit_overlap(&cfg, &a, &c).unwrap());
    }

    #[test]
    fn frequency_separation_blocks_collision() {
        let cfg = cfg();
        let a = tx_c(0.0, 50e3);
        let b = tx_c(0.0, 50e3 + cfg.b_hz);
        assert!(!explicit_overlap(&cfg, &a, &b).unwrap());
    }

    #[test]
    fn slot_coordinates_compare_by_index() {
        let cfg = cfg();
        let a = Transmission {
            time: TimeCoord::Slot(3),
            freq: FreqCoord::Channel(7),
        };
        let b = Transmission {
            time: TimeCoord::Slot(3),
            freq: FreqCoord::Channel(8),
        };
        assert!(!explicit_overlap(&cfg, &a, &b).unwrap());
        let c = Transmission {
            time: TimeCoord::Slot(4),
            freq: FreqCoord::Channel(7),
        };
        assert!(!explicit_overlap(&cfg, &a, &c).unwrap());
        assert!(explicit_overlap(&cfg, &a, &a).unwrap());
    }

    #[test]
    fn mixed_coordinates_are_rejected() {
        let cfg = cfg();
        let a = tx_c(0.0, 50e3);
        let b = Transmission {
            time: TimeCoord::Slot(0),
            freq: FreqCoord::Center(50e3),
        };
        assert!(matches!(
            explicit_overlap(&cfg, &a, &b
            ),
            Err(SimError::MixedFidelity(_))
        ));
    }

    #[test]
    fn empirical_time_overlap_probability_is_two_t_over_period() {
        let cfg = cfg();
        let mut rng = stream_rng(21, 7, 0);
        let pairs = 100_000u32;
        let mut hits = 0u32;
        for _ in 0..pairs {
            let a = tx_c(rng.gen::<f64>() * cfg.period_s, 0.0);
            let b = tx_c(rng.gen::<f64>() * cfg.period_s, 0.0);
            if explicit_overlap(&cfg, &a, &b).unwrap() {
                hits += 1;
            }
        }
        let p = hits as f64 / pairs as f64;
        let expected = 2.0 * cfg.t_s / cfg.period_s;
        let sigma = (expected * (1.0 - expected) / pairs as f64).sqrt();
        assert!(
            (p - expected).abs() <= 3.0 * sigma + expected * expected,
            "overlap rate {p} vs {expected}"
        );
    }

    #[test]
    fn empirical_frequency_overlap_probability_is_two_b_over_band() {
        let cfg = cfg();
        let mut rng = stream_rng(22, 7, 0);
        let pairs = 100_000u32;
        let mut hits = 0u32;
        for _ in 0..pairs {
            let a = tx_c(0.0, rng.gen::<f64>() * cfg.band_hz);
            let b = tx_c(0.0, rng.gen::<f64>() * cfg.band_hz);
            if explicit_overlap(&cfg, &a, &b).unwrap() {
                hits += 1;
            }
        }
        let p = hits as f64 / pairs as f64;
        let expected = 2.0 * cfg.b_hz / cfg.band_hz;
        let sigma = (expected * (1.0 - expected) / pairs as f64).sqrt();
        // the uniform-centre edge deficit is (b/B)^2, inside the noise here
        assert!(
            (p - expected).abs() <= 3.0 * sigma + expected * expected,
            "overlap rate {p} vs {expected}"
        );
    }

    #[test]
    fn fractional_beta_has_no_explicit_realization() {
        let mut c = cfg();
        c.beta_t = 1.5;
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Existing,
            RepetitionScheme::Random,
            Association::NoAssociation,
            1,
        );
        let opts = SimOptions {
            mode: SimMode::ExplicitSlots,
            torus_side_m: 10_000.0,
            realizations: 1,
            master_seed: 1,
            include_noise: false,
        };
        let err = sample_explicit(&c, &spec, &opts, &mut stream_rng(1, 1, 1)).unwrap_err();
        assert!(matches!(err, SimError::FractionalBeta { .. }));
    }

    #[test]
    fn pn_has_no_explicit_realization() {
        let c = cfg();
        let spec = ProtocolSpec::uniform(
            ProtocolKind::Existing,
            RepetitionScheme::Pn,
            Association::NoAssociation,
            1,
        );
        let opts = SimOptions {
            mode: SimMode::ExplicitSlots,
            torus_side_m: 10_000.0,
            realizations: 1,
            master_seed: 1,
            include_noise: false,
        };
        let err = sample_explicit(&c, &spec, &opts, &mut stream_rng(1, 1, 1)).unwrap_err();
        assert!(matches!(err, SimError::ExplicitPn));
    }
}
