//! Closed-form success probabilities and transmission capacities.
//!
//! Every expression here is for the interference-limited regime (noise
//! relative to the IoT transmit power is taken to zero); noise is exercised
//! only by the Monte-Carlo engine. Alternating binomial sums use exact
//! integer binomials and compensated accumulation, which keeps them accurate
//! for the supported range of repetitions (N <= 64).

use crate::model::{
    Association, DerivedParams, NetworkConfig, ProtocolKind, ProtocolSpec, RepetitionScheme,
};
use crate::real::{CompensatedSum, Real};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("harmonic number needs n >= 1 (got {0})")]
    HarmonicDomain(u32),
    #[error("no closed form: {0}")]
    UnsupportedCombination(String),
    #[error(
        "allocation has {got_len} parts summing to {got_sum}; \
         config needs {bands} parts summing to {repetitions}"
    )]
    AllocationMismatch {
        got_len: usize,
        got_sum: u32,
        bands: u32,
        repetitions: u32,
    },
    #[error("composition count C({n}+{m}-1, {m}-1) exceeds the {limit} limit")]
    CompositionBound { n: u32, m: u32, limit: u64 },
    #[error("gamma must lie in (0,1) (got {0})")]
    GammaOutOfRange(f64),
    #[error("repetitions outside the supported range 1..=64 (got {0})")]
    RepetitionsRange(u32),
}

/// Largest composition enumeration allowed for the unslotted multiband sum.
pub const COMPOSITION_LIMIT: u64 = 1_000_000;

/// Largest supported repetition count.
pub const MAX_REPETITIONS: u32 = 64;

/// Exact binomial coefficient; `None` on overflow.
fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(r)
}

fn binomial_f<F: Real>(n: u32, k: u32) -> F {
    // Exact for n <= 64 in u128; the f64 conversion is the only rounding.
    F::of(binomial_u128(n as u64, k as u64).expect("binomial overflow") as f64)
}

/// H_n = sum_{k=1..n} 1/k, accumulated smallest-first.
pub fn harmonic_number<F: Real>(n: u32) -> Result<F, AnalyticError> {
    if n < 1 {
        return Err(AnalyticError::HarmonicDomain(n));
    }
    Ok(harmonic_or_zero(n))
}

/// Harmonic number with the H_0 = 0 convention used for empty bands.
pub(crate) fn harmonic_or_zero<F: Real>(n: u32) -> F {
    let mut acc = CompensatedSum::new();
    for k in (1..=n).rev() {
        acc.add(F::one() / F::of_u32(k));
    }
    acc.value()
}

/// Per-configuration context shared by all closed forms.
struct Ctx<F: Real> {
    n: u32,
    delta: F,
    xi: F,
    /// tau^delta
    tau_d: F,
    /// thinned IoT interferer density
    lam_iot: F,
    /// p_hat_inc^delta * thinned incumbent density
    lam_inc: F,
}

impl<F: Real> Ctx<F> {
    fn new(cfg: &NetworkConfig<F>) -> Self {
        let d: DerivedParams<F> = cfg.derived();
        Ctx {
            n: cfg.repetitions,
            delta: d.delta,
            xi: d.xi,
            tau_d: cfg.tau.powf(d.delta),
            lam_iot: d.lambda_iot_thinned,
            lam_inc: d.p_hat_inc.powf(d.delta) * d.lambda_inc_thinned,
        }
    }

    fn interference(&self) -> F {
        self.lam_iot + self.lam_inc
    }

    /// Interferer-density mix entering the k-th binomial term.
    fn mix(&self, k: u32, scheme: RepetitionScheme) -> F {
        let kf = F::of_u32(k);
        match scheme {
            RepetitionScheme::Random => kf * self.interference(),
            RepetitionScheme::Pn => kf.powf(self.delta) * self.lam_iot + kf * self.lam_inc,
        }
    }

    /// Probability that no copy is decoded at any base station of density
    /// `lam_bs_eff` listening to the device's channel.
    fn no_assoc_failure(&self, lam_bs_eff: F, scheme: RepetitionScheme) -> F {
        if self.interference() <= F::zero() {
            return F::zero(); // no interferers: some station always decodes
        }
        let gain = self.xi / self.tau_d * lam_bs_eff;
        let exponent = match scheme {
            RepetitionScheme::Random => {
                -gain * harmonic_or_zero::<F>(self.n) / self.interference()
            }
            RepetitionScheme::Pn => {
                let mut s = CompensatedSum::new();
                for k in 1..=self.n {
                    let sign = if k % 2 == 1 { -F::one() } else { F::one() };
                    s.add(sign * binomial_f::<F>(self.n, k) / self.mix(k, scheme));
                }
                gain * s.value()
            }
        };
        exponent.exp()
    }

    /// Probability that the nearest station of density `lam_bs_eff` decodes
    /// no copy.
    fn nearest_failure(&self, lam_bs_eff: F, scheme: RepetitionScheme) -> F {
        if self.interference() <= F::zero() {
            return F::zero();
        }
        let base = self.tau_d / (self.xi * lam_bs_eff);
        let mut s = CompensatedSum::new();
        s.add(F::one()); // k = 0 term
        for k in 1..=self.n {
            let sign = if k % 2 == 1 { -F::one() } else { F::one() };
            s.add(sign * binomial_f::<F>(self.n, k) / (F::one() + base * self.mix(k, scheme)));
        }
        s.value()
    }
}

fn clamp_probability<F: Real>(p: F) -> F {
    p.max(F::zero()).min(F::one())
}

fn check_repetitions(n: u32) -> Result<(), AnalyticError> {
    if n < 1 || n > MAX_REPETITIONS {
        return Err(AnalyticError::RepetitionsRange(n));
    }
    Ok(())
}

/// The (protocol, scheme, association) combinations with a closed form.
pub fn closed_form_combos() -> Vec<(ProtocolKind, RepetitionScheme, Association)> {
    use Association::*;
    use ProtocolKind::*;
    use RepetitionScheme::*;
    let mut v = Vec::new();
    for kind in [Existing, Benchmark, SlottedMultiband] {
        for scheme in [Random, Pn] {
            for assoc in [NoAssociation, NearestBs] {
                v.push((kind, scheme, assoc));
            }
        }
    }
    v.push((UnslottedMultiband, Random, NoAssociation));
    v
}

/// Probability that at least one of the N copies is decoded.
///
/// Interference-limited closed forms; the unslotted multiband protocol is
/// only available with random repetition and no association — the other
/// variants have no closed form and must go through the simulator.
pub fn success_probability<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
) -> Result<F, AnalyticError> {
    check_repetitions(cfg.repetitions)?;
    if cfg.lambda_bs <= F::zero() {
        return Ok(F::zero());
    }
    let ctx = Ctx::new(cfg);
    let failure = |lam_eff: F| match spec.association {
        Association::NoAssociation => ctx.no_assoc_failure(lam_eff, spec.scheme),
        Association::NearestBs => ctx.nearest_failure(lam_eff, spec.scheme),
    };
    let p = match spec.kind {
        ProtocolKind::Existing | ProtocolKind::Benchmark => F::one() - failure(cfg.lambda_bs),
        ProtocolKind::SlottedMultiband => {
            // Devices pick a band uniformly; stations follow band_probs.
            let mut mean = CompensatedSum::new();
            for &p_m in &spec.band_probs {
                mean.add(failure(p_m * cfg.lambda_bs));
            }
            F::one() - mean.value() / F::of_u32(cfg.bands)
        }
        ProtocolKind::UnslottedMultiband => {
            if spec.scheme != RepetitionScheme::Random
                || spec.association != Association::NoAssociation
            {
                return Err(AnalyticError::UnsupportedCombination(format!(
                    "unslotted multiband with scheme `{}` and association `{}`",
                    spec.scheme.label(),
                    spec.association.label()
                )));
            }
            let mut fail = CompensatedSum::new();
            for (alloc, weight) in enumerate_compositions::<F>(cfg.repetitions, cfg.bands)? {
                let s = success_given_allocation(cfg, spec, &alloc)?;
                fail.add(weight * (F::one() - s));
            }
            F::one() - fail.value()
        }
    };
    Ok(clamp_probability(p))
}

/// Messages-per-band split for the unslotted multiband protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub counts: Vec<u32>,
}

impl Allocation {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Success probability conditioned on sending `counts[m]` copies over band m.
pub fn success_given_allocation<F: Real>(
    cfg: &NetworkConfig<F>,
    spec: &ProtocolSpec<F>,
    alloc: &Allocation,
) -> Result<F, AnalyticError> {
    check_repetitions(cfg.repetitions)?;
    if alloc.counts.len() != cfg.bands as usize || alloc.total() != cfg.repetitions {
        return Err(AnalyticError::AllocationMismatch {
            got_len: alloc.counts.len(),
            got_sum: alloc.total(),
            bands: cfg.bands,
            repetitions: cfg.repetitions,
        });
    }
    if cfg.lambda_bs <= F::zero() {
        return Ok(F::zero());
    }
    let ctx = Ctx::new(cfg);
    if ctx.interference() <= F::zero() {
        return Ok(F::one());
    }
    // Product over bands of per-band failures collapses to one exponential
    // with the p_m-weighted harmonic sum; H_0 = 0 handles empty bands.
    let mut weighted = CompensatedSum::new();
    for (&n_m, &p_m) in alloc.counts.iter().zip(&spec.band_probs) {
        weighted.add(harmonic_or_zero::<F>(n_m) * p_m);
    }
    let exponent = -ctx.xi / ctx.tau_d * cfg.lambda_bs / ctx.interference() * weighted.value();
    Ok(clamp_probability(F::one() - exponent.exp()))
}

/// Iterator over all weak compositions of `n` into `m` ordered parts,
/// paired with their multinomial probability under uniform band choice.
#[derive(Debug)]
pub struct Compositions<F: Real> {
    counts: Vec<u32>,
    n: u32,
    m: usize,
    m_pow_n: f64,
    started: bool,
    done: bool,
    _marker: std::marker::PhantomData<F>,
}

/// Enumerates every way of spreading `n` copies over `m` bands; weights sum
/// to one.
pub fn enumerate_compositions<F: Real>(
    n: u32,
    m: u32,
) -> Result<Compositions<F>, AnalyticError> {
    check_repetitions(n)?;
    if m < 1 {
        return Err(AnalyticError::CompositionBound {
            n,
            m,
            limit: COMPOSITION_LIMIT,
        });
    }
    let count = binomial_u128((n + m - 1) as u64, (m - 1) as u64);
    match count {
        Some(c) if c <= COMPOSITION_LIMIT as u128 => {}
        _ => {
            return Err(AnalyticError::CompositionBound {
                n,
                m,
                limit: COMPOSITION_LIMIT,
            })
        }
    }
    Ok(Compositions {
        counts: Vec::new(),
        n,
        m: m as usize,
        m_pow_n: (m as f64).powi(n as i32),
        started: false,
        done: false,
        _marker: std::marker::PhantomData,
    })
}

impl<F: Real> Compositions<F> {
    fn weight(&self) -> F {
        let mut w = 1.0f64;
        let mut rem = self.n as u64;
        for &c in &self.counts {
            w *= binomial_u128(rem, c as u64).expect("multinomial overflow") as f64;
            rem -= c as u64;
        }
        F::of(w / self.m_pow_n)
    }

    fn emit(&self) -> (Allocation, F) {
        (
            Allocation {
                counts: self.counts.clone(),
            },
            self.weight(),
        )
    }
}

impl<F: Real> Iterator for Compositions<F> {
    type Item = (Allocation, F);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.counts = vec![0; self.m];
            self.counts[0] = self.n;
            return Some(self.emit());
        }
        // Colex successor: move one unit right from the first non-empty
        // part, dumping the rest of that part back into part 0.
        let i = self
            .counts
            .iter()
            .position(|&c| c > 0)
            .expect("parts sum to n >= 1");
        if i == self.m - 1 {
            self.done = true;
            return None;
        }
        let v = self.counts[i];
        self.counts[i] = 0;
        self.counts[0] = v - 1;
        self.counts[i + 1] += 1;
        Some(self.emit())
    }
}

/// Query for the supportable device density at a success constraint.
#[derive(Clone, Debug)]
pub struct CapacityQuery<F: Real = f64> {
    /// Success-probability constraint in (0,1).
    pub gamma: F,
    pub protocol: ProtocolSpec<F>,
}

/// Result of a numeric capacity inversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityOutcome<F: Real = f64> {
    /// gamma * F^{-1}(gamma), devices per m².
    pub density: F,
    /// False when even zero devices miss the constraint.
    pub reachable: bool,
}

fn ln_inv_gap<F: Real>(gamma: F) -> F {
    (F::one() / (F::one() - gamma)).ln()
}

fn check_gamma<F: Real>(gamma: F) -> Result<(), AnalyticError> {
    if !(gamma > F::zero() && gamma < F::one()) {
        return Err(AnalyticError::GammaOutOfRange(gamma.as_f64()));
    }
    Ok(())
}

/// Transmission capacity in closed form, clamped at zero where the incumbent
/// term dominates. Available for random repetition: any N without
/// association, N = 1 with nearest association (uniform band probabilities
/// for the slotted multiband forms).
pub fn capacity_closed_form<F: Real>(
    cfg: &NetworkConfig<F>,
    query: &CapacityQuery<F>,
) -> Result<F, AnalyticError> {
    check_gamma(query.gamma)?;
    check_repetitions(cfg.repetitions)?;
    let spec = &query.protocol;
    if spec.scheme != RepetitionScheme::Random {
        return Err(AnalyticError::UnsupportedCombination(
            "capacity closed forms require the random repetition scheme".into(),
        ));
    }
    let d = cfg.derived();
    let gamma = query.gamma;
    let n = F::of_u32(cfg.repetitions);
    let m = F::of_u32(cfg.bands);
    let xi_tau = d.xi * cfg.tau.powf(-d.delta);
    let inc_term = d.p_hat_inc.powf(d.delta) * d.lambda_inc_thinned;
    let per_traffic = cfg.beta_t * cfg.beta_f * cfg.b_hz * cfg.traffic_ratio();
    let h_n: F = harmonic_or_zero(cfg.repetitions);

    let uniform_needed = || -> Result<(), AnalyticError> {
        if !spec.is_uniform() {
            return Err(AnalyticError::UnsupportedCombination(
                "slotted multiband capacity closed forms assume uniform band probabilities"
                    .into(),
            ));
        }
        Ok(())
    };
    let single_copy_needed = || -> Result<(), AnalyticError> {
        if cfg.repetitions != 1 {
            return Err(AnalyticError::UnsupportedCombination(
                "nearest-association capacity closed forms hold for a single repetition only"
                    .into(),
            ));
        }
        Ok(())
    };

    let value = match (spec.kind, spec.association) {
        (ProtocolKind::Existing | ProtocolKind::Benchmark, Association::NoAssociation) => {
            let pre = gamma * m * cfg.band_hz / per_traffic;
            pre * (xi_tau * h_n * cfg.lambda_bs / (n * ln_inv_gap(gamma)) - inc_term / n)
        }
        (ProtocolKind::SlottedMultiband, Association::NoAssociation) => {
            uniform_needed()?;
            let pre = gamma * cfg.band_hz / per_traffic;
            pre * (xi_tau * h_n * cfg.lambda_bs / (n * ln_inv_gap(gamma))
                - m * inc_term / n)
        }
        (ProtocolKind::Existing | ProtocolKind::Benchmark, Association::NearestBs) => {
            single_copy_needed()?;
            let pre = gamma * m * cfg.band_hz / per_traffic;
            let odds = gamma / (F::one() - gamma);
            pre * (xi_tau * h_n * cfg.lambda_bs / odds - inc_term)
        }
        (ProtocolKind::SlottedMultiband, Association::NearestBs) => {
            uniform_needed()?;
            single_copy_needed()?;
            let pre = gamma * m * cfg.band_hz / per_traffic;
            let odds = gamma / (F::one() - gamma);
            pre * (xi_tau * h_n * (cfg.lambda_bs / m) / odds - inc_term)
        }
        (ProtocolKind::UnslottedMultiband, _) => {
            return Err(AnalyticError::UnsupportedCombination(
                "unslotted multiband capacity is numeric only".into(),
            ))
        }
    };
    Ok(value.max(F::zero()))
}

/// Inverts the success probability in the device density by bisection.
///
/// The closed forms are strictly decreasing in the IoT density, so the
/// bracket [0, hi] with doubling is valid; the returned density satisfies
/// |F(density/gamma) - gamma| <= 1e-9 (or a few ulps for narrower scalars).
pub fn capacity_numeric<F: Real>(
    cfg: &NetworkConfig<F>,
    query: &CapacityQuery<F>,
) -> Result<CapacityOutcome<F>, AnalyticError> {
    check_gamma(query.gamma)?;
    let gamma = query.gamma;
    let eval = |lam: F| success_probability(&cfg.with_lambda_iot(lam), &query.protocol);
    let tol = F::of(1e-9).max(F::epsilon() * F::of(64.0));
    let cap = F::of(1e18);

    let p0 = eval(F::zero())?;
    if p0 < gamma {
        return Ok(CapacityOutcome {
            density: F::zero(),
            reachable: false,
        });
    }
    let mut hi = if cfg.lambda_iot > F::zero() {
        cfg.lambda_iot
    } else {
        F::of(1e-9)
    };
    while eval(hi)? >= gamma {
        hi = hi * F::of(2.0);
        if hi > cap {
            return Ok(CapacityOutcome {
                density: gamma * cap,
                reachable: true,
            });
        }
    }
    let mut lo = F::zero();
    let mut mid = hi;
    for _ in 0..600 {
        mid = (lo + hi) / F::of(2.0);
        let p = eval(mid)?;
        if (p - gamma).abs() <= tol {
            break;
        }
        if p > gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CapacityOutcome {
        density: gamma * mid,
        reachable: true,
    })
}
