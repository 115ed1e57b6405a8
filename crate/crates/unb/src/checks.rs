//! Built-in validation suite.
//!
//! Cross-checks the closed forms against independent routes (quadrature,
//! algebraic identities, Kolmogorov-Smirnov goodness of fit, Monte-Carlo)
//! and the two simulator fidelities against each other. The CLI `validate`
//! subcommand runs the whole list and fails the process when any check
//! fails; the acceptance suite asserts the same list.

use crate::analytic::{
    capacity_closed_form, capacity_numeric, closed_form_combos, enumerate_compositions,
    harmonic_number, success_probability, CapacityQuery,
};
use crate::config::presets;
use crate::model::{
    Association, NetworkConfig, ProtocolKind, ProtocolSpec, RepetitionScheme,
};
use crate::sim::rng::{stream_rng, STREAM_DIAGNOSTIC};
use crate::sim::{
    estimate_success_probability, geometry, sinr_cdf, SimMode, SimOptions, DEFAULT_SEED,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckReport {
            name,
            passed,
            detail,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Smaller sample sizes and looser Monte-Carlo tolerances.
    pub quick: bool,
    pub seed: u64,
    /// Multiplies the interference constant xi on the closed-form side of
    /// the quadrature checks. Anything other than 1.0 must make the suite
    /// fail; used to prove the checks can catch a corrupted constant.
    pub xi_scale: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            quick: false,
            seed: DEFAULT_SEED,
            xi_scale: 1.0,
        }
    }
}

/// Runs every check in a fixed order.
pub fn run_all(opts: &CheckOptions) -> Vec<CheckReport> {
    vec![
        harmonic_ratio_decreasing(),
        composition_enumeration(),
        jensen_ordering(opts),
        uniform_band_optimality(opts),
        pgfl_quadrature(opts),
        nearest_term_quadrature(opts),
        nearest_distance_ks(opts),
        capacity_inversion(),
        thinning_retention(opts),
        explicit_vs_thinned(opts),
        noise_negligibility(opts),
        torus_doubling(opts),
        analytic_vs_mc(opts),
    ]
}

/// H_N / N must decrease strictly: repetitions always cost more airtime
/// than the decode-chance they add in an IoT-interference-dominated network.
pub fn harmonic_ratio_decreasing() -> CheckReport {
    let mut prev = f64::INFINITY;
    for n in 1..=64u32 {
        let ratio = harmonic_number::<f64>(n).unwrap() / n as f64;
        if ratio >= prev {
            return CheckReport::new(
                "harmonic-ratio-decreasing",
                false,
                format!("H_n/n not strictly decreasing at n = {n}"),
            );
        }
        prev = ratio;
    }
    CheckReport::new(
        "harmonic-ratio-decreasing",
        true,
        "H_n/n strictly decreasing for n = 1..=64".into(),
    )
}

/// Stars-and-bars count and unit weight mass for the band-split enumeration.
pub fn composition_enumeration() -> CheckReport {
    let cases = [(1u32, 3u32, 3u128), (3, 5, 35), (4, 3, 15), (8, 5, 495)];
    for (n, m, expected) in cases {
        let items: Vec<_> = match enumerate_compositions::<f64>(n, m) {
            Ok(it) => it.collect(),
            Err(e) => {
                return CheckReport::new("composition-enumeration", false, format!("{e}"));
            }
        };
        if items.len() as u128 != expected {
            return CheckReport::new(
                "composition-enumeration",
                false,
                format!("N={n} M={m}: {} compositions, expected {expected}", items.len()),
            );
        }
        let mass: f64 = items.iter().map(|(_, w)| w).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return CheckReport::new(
                "composition-enumeration",
                false,
                format!("N={n} M={m}: weights sum to {mass}"),
            );
        }
    }
    CheckReport::new(
        "composition-enumeration",
        true,
        "counts match C(N+M-1, M-1), weights sum to 1".into(),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> NetworkConfig<f64> {
    let mut cfg = presets::table2();
    cfg.lambda_bs = 4e-8 * 10f64.powf(rng.gen_range(-1.0..1.0));
    cfg.lambda_iot = cfg.lambda_bs * 10f64.powf(rng.gen_range(2.0..5.0));
    cfg.lambda_inc = cfg.lambda_bs * 10f64.powf(rng.gen_range(-1.0..2.5));
    cfg.alpha = rng.gen_range(2.2..5.5);
    cfg.tau = 10f64.powf(rng.gen_range(-1.5..1.5));
    cfg.bands = rng.gen_range(1..=8);
    cfg.repetitions = rng.gen_range(1..=12);
    cfg.beta_t = rng.gen_range(1.0..=2.0);
    cfg.beta_f = rng.gen_range(1.0..=2.0);
    cfg
}

/// Random repetition must dominate PN repetition (interference diversity),
/// with and without station association.
pub fn jensen_ordering(opts: &CheckOptions) -> CheckReport {
    let trials = if opts.quick { 30 } else { 100 };
    let mut rng = stream_rng(opts.seed, STREAM_DIAGNOSTIC, 101);
    for trial in 0..trials {
        let cfg = random_config(&mut rng);
        for assoc in [Association::NoAssociation, Association::NearestBs] {
            let random = success_probability(
                &cfg,
                &ProtocolSpec::uniform(
                    ProtocolKind::Benchmark,
                    RepetitionScheme::Random,
                    assoc,
                    cfg.bands,
                ),
            )
            .unwrap();
            let pn = success_probability(
                &cfg,
                &ProtocolSpec::uniform(
                    ProtocolKind::Benchmark,
                    RepetitionScheme::Pn,
                    assoc,
                    cfg.bands,
                ),
            )
            .unwrap();
            if random < pn - 1e-12 {
                return CheckReport::new(
                    "jensen-ordering",
                    false,
                    format!(
                        "trial {trial} {assoc:?}: random {random} < pn {pn} \
                         (N={}, alpha={:.3})",
                        cfg.repetitions, cfg.alpha
                    ),
                );
            }
        }
    }
    CheckReport::new(
        "jensen-ordering",
        true,
        format!("random >= pn on {trials} random configurations"),
    )
}

/// Uniform station band probabilities maximize the slotted multiband form.
pub fn uniform_band_optimality(opts: &CheckOptions) -> CheckReport {
    let trials = if opts.quick { 20 } else { 50 };
    let cfg = presets::table2();
    let uniform = ProtocolSpec::uniform(
        ProtocolKind::SlottedMultiband,
        RepetitionScheme::Random,
        Association::NoAssociation,
        cfg.bands,
    );
    let best = success_probability(&cfg, &uniform).unwrap();
    let mut rng = stream_rng(opts.seed, STREAM_DIAGNOSTIC, 102);
    for trial in 0..trials {
        let mut probs: Vec<f64> = (0..cfg.bands).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
        let spec = ProtocolSpec {
            band_probs: probs.clone(),
            ..uniform.clone()
        };
        let p = success_probability(&cfg, &spec).unwrap();
        if p > best + 1e-12 {
            return CheckReport::new(
                "uniform-band-optimality",
                false,
                format!("trial {trial}: {probs:?} gives {p} > uniform {best}"),
            );
        }
    }
    CheckReport::new(
        "uniform-band-optimality",
        true,
        format!("uniform probabilities dominate {trials} perturbations"),
    )
}

/// Adaptive Simpson quadrature.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fa = f(a);
        let fm = f(m);
        let fb = f(b);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fa, fm, fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, ..) = rule(f, a, m);
        let (right, ..) = rule(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let (whole, ..) = rule(f, a, b);
    recurse(f, a, b, whole, tol, depth)
}

/// Interference functional of the incumbent field, integrated numerically:
/// 2 pi lam Int_0^inf y s / (y^alpha + s) dy, with a series tail beyond the
/// finite window.
fn shot_noise_exponent_numeric(s: f64, alpha: f64, lam: f64) -> f64 {
    let y_star = s.powf(1.0 / alpha);
    let upper = 1e3 * y_star;
    let integrand = move |y: f64| y * s / (y.powf(alpha) + s);
    let body = simpson(&integrand, 0.0, upper, 1e-12 * y_star * y_star * 10.0, 48);
    // tail: s * Int y^(1-a) (1 - s y^-a + s^2 y^-2a) dy from `upper`
    let tail = s * upper.powf(2.0 - alpha) / (alpha - 2.0)
        - s * s * upper.powf(2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0)
        + s * s * s * upper.powf(2.0 - 3.0 * alpha) / (3.0 * alpha - 2.0);
    2.0 * std::f64::consts::PI * lam * (body + tail)
}

/// The probability-generating-functional step behind every closed form:
/// exp(-pi xi^-1 (tau p)^delta lam x^2) must equal the numerically
/// integrated exponential for random parameter tuples.
pub fn pgfl_quadrature(opts: &CheckOptions) -> CheckReport {
    let tuples = if opts.quick { 8 } else { 20 };
    let p_hat = 4.8e-3;
    let mut rng = stream_rng(opts.seed, STREAM_DIAGNOSTIC, 103);
    let mut worst = 0.0f64;
    for trial in 0..tuples {
        let alpha: f64 = rng.gen_range(2.2..5.5);
        let delta = 2.0 / alpha;
        let xi = (std::f64::consts::PI * delta).sin() / (delta * std::f64::consts::PI)
            * opts.xi_scale;
        let tau = 10f64.powf(rng.gen_range(-10.0..15.0) / 10.0);
        let x: f64 = rng.gen_range(200.0..4000.0);
        // pick the incumbent density so the exponent spans a useful range
        let target = 10f64.powf(rng.gen_range(-2.0..0.5));
        let xi_true = (std::f64::consts::PI * delta).sin() / (delta * std::f64::consts::PI);
        let lam = target * xi_true
            / (std::f64::consts::PI * (tau * p_hat).powf(delta) * x * x);

        let closed = (-std::f64::consts::PI / xi * (tau * p_hat).powf(delta) * lam * x * x).exp();
        let s = tau * x.powf(alpha) * p_hat;
        let numeric = (-shot_noise_exponent_numeric(s, alpha, lam)).exp();
        let rel = (closed - numeric).abs() / numeric;
        worst = worst.max(rel);
        if rel > 1e-6 {
            return CheckReport::new(
                "pgfl-quadrature",
                false,
                format!(
                    "tuple {trial} (alpha={alpha:.3}, tau={tau:.3}, x={x:.0}): \
                     closed {closed:.9e} vs numeric {numeric:.9e}, rel {rel:.2e}"
                ),
            );
        }
    }
    CheckReport::new(
        "pgfl-quadrature",
        true,
        format!("{tuples} tuples matched; worst relative error {worst:.2e}"),
    )
}

/// Each binomial term of the nearest-station form equals a fully numeric
/// route: the per-copy interference exponents come from shot-noise
/// quadrature (never referencing xi) and the average over the serving
/// distance is integrated against the nearest-distance law.
pub fn nearest_term_quadrature(opts: &CheckOptions) -> CheckReport {
    let cfg = presets::table2();
    let d = cfg.derived();
    let xi = d.xi * opts.xi_scale;
    let total = d.lambda_iot_thinned + d.p_hat_inc.powf(d.delta) * d.lambda_inc_thinned;
    let lam_bs = cfg.lambda_bs;
    let alpha = cfg.alpha;
    let mut worst = 0.0f64;
    for k in 1..=cfg.repetitions {
        let closed = 1.0 / (1.0 + k as f64 / xi * cfg.tau.powf(d.delta) * total / lam_bs);
        let laplace_k = move |x: f64| {
            let s_iot = cfg.tau * x.powf(alpha);
            let s_inc = s_iot * d.p_hat_inc;
            let exponent = shot_noise_exponent_numeric(s_iot, alpha, d.lambda_iot_thinned)
                + shot_noise_exponent_numeric(s_inc, alpha, d.lambda_inc_thinned);
            (-(k as f64) * exponent).exp()
        };
        let upper = (40.0 / (std::f64::consts::PI * lam_bs)).sqrt();
        let integrand = move |x: f64| {
            x * (-std::f64::consts::PI * lam_bs * x * x).exp() * laplace_k(x)
        };
        let numeric = 2.0 * std::f64::consts::PI * lam_bs
            * simpson(&integrand, 0.0, upper, 1e-13 / lam_bs, 24);
        let rel = (closed - numeric).abs() / closed;
        worst = worst.max(rel);
        if rel > 1e-8 {
            return CheckReport::new(
                "nearest-term-quadrature",
                false,
                format!("k={k}: closed {closed:.12e} vs numeric {numeric:.12e}, rel {rel:.2e}"),
            );
        }
    }
    CheckReport::new(
        "nearest-term-quadrature",
        true,
        format!(
            "terms k=1..{} matched; worst relative error {worst:.2e}",
            cfg.repetitions
        ),
    )
}

/// Empirical nearest-station distances against 1 - exp(-pi lam x^2),
/// Kolmogorov-Smirnov at the 1% level.
pub fn nearest_distance_ks(opts: &CheckOptions) -> CheckReport {
    let draws = if opts.quick { 4_000 } else { 10_000 };
    let lam = 4e-8;
    let side = 30_000.0f64;
    let origin = geometry::Point {
        x: side / 2.0,
        y: side / 2.0,
    };
    let mut distances: Vec<f64> = Vec::with_capacity(draws);
    for i in 0..draws {
        let mut rng = stream_rng(opts.seed, STREAM_DIAGNOSTIC, 2_000_000 + i as u64);
        let bs = geometry::sample_hppp::<f64, _>(lam, side, &mut rng);
        if let Some(j) = geometry::nearest_listening_bs(origin, &bs, None, side) {
            distances.push(geometry::torus_dist2(origin, bs[j], side).sqrt());
        }
    }
    distances.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = distances.len();
    let cdf = |x: f64| 1.0 - (-std::f64::consts::PI * lam * x * x).exp();
    let mut d_stat = 0.0f64;
    for (i, &x) in distances.iter().enumerate() {
        let f = cdf(x);
        d_stat = d_stat
            .max((f - i as f64 / n as f64).abs())
            .max(((i + 1) as f64 / n as f64 - f).abs());
    }
    // asymptotic critical value at the 1% level: sqrt(ln(2/0.01) / 2) / sqrt(n)
    let critical = 1.6276 / (n as f64).sqrt();
    CheckReport::new(
        "nearest-distance-ks",
        d_stat < critical,
        format!("D = {d_stat:.5} vs 1% critical {critical:.5} over {n} draws"),
    )
}

/// Numeric inversion must land on the closed forms wherever both exist.
pub fn capacity_inversion() -> CheckReport {
    let table2 = presets::table2();
    let single = table2.with_bands(1);
    let mut n1 = table2.clone();
    n1.repetitions = 1;
    let cases: Vec<(&str, NetworkConfig<f64>, ProtocolKind, Association)> = vec![
        (
            "benchmark",
            table2.clone(),
            ProtocolKind::Benchmark,
            Association::NoAssociation,
        ),
        (
            "existing",
            single.clone(),
            ProtocolKind::Existing,
            Association::NoAssociation,
        ),
        (
            "slotted-mb",
            table2.clone(),
            ProtocolKind::SlottedMultiband,
            Association::NoAssociation,
        ),
        (
            "benchmark-nearest",
            n1.clone(),
            ProtocolKind::Benchmark,
            Association::NearestBs,
        ),
        (
            "slotted-mb-nearest",
            n1.clone(),
            ProtocolKind::SlottedMultiband,
            Association::NearestBs,
        ),
    ];
    let mut worst = 0.0f64;
    for gamma in [0.5, 0.9] {
        for (label, cfg, kind, assoc) in &cases {
            let query = CapacityQuery {
                gamma,
                protocol: ProtocolSpec::uniform(
                    *kind,
                    RepetitionScheme::Random,
                    *assoc,
                    cfg.bands,
                ),
            };
            let closed = capacity_closed_form(cfg, &query).unwrap();
            let numeric = capacity_numeric(cfg, &query).unwrap();
            if closed == 0.0 {
                if numeric.reachable {
                    return CheckReport::new(
                        "capacity-inversion",
                        false,
                        format!("{label} gamma={gamma}: clamp disagrees with inversion"),
                    );
                }
                continue;
            }
            let rel = (numeric.density - closed).abs() / closed;
            worst = worst.max(rel);
            if rel > 1e-6 {
                return CheckReport::new(
                    "capacity-inversion",
                    false,
                    format!(
                        "{label} gamma={gamma}: closed {closed:.6e} vs numeric {:.6e}, rel {rel:.2e}",
                        numeric.density
                    ),
                );
            }
        }
    }
    CheckReport::new(
        "capacity-inversion",
        true,
        format!("numeric matches closed forms; worst relative error {worst:.2e}"),
    )
}

/// Mean retained interferers per copy must equal the thinned density times
/// the torus area.
pub fn thinning_retention(opts: &CheckOptions) -> CheckReport {
    let realizations = if opts.quick { 2_000 } else { 10_000 };
    let cfg = presets::table2();
    let spec = ProtocolSpec::uniform(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
        cfg.bands,
    );
    let sim = SimOptions {
        mode: SimMode::Thinned,
        torus_side_m: 40_000.0,
        realizations,
        master_seed: opts.seed,
        include_noise: false,
    };
    let expected = cfg.derived().lambda_iot_thinned * sim.torus_side_m * sim.torus_side_m;
    let mut total = 0usize;
    let mut copies = 0usize;
    for i in 0..realizations {
        let world = crate::sim::sample_realization(&cfg, &spec, &sim, i).unwrap();
        for set in &world.iot_per_message {
            total += set.len();
            copies += 1;
        }
    }
    let mean = total as f64 / copies as f64;
    let sd = (expected / copies as f64).sqrt();
    CheckReport::new(
        "thinning-retention",
        (mean - expected).abs() <= 3.0 * sd,
        format!("mean {mean:.3} vs expected {expected:.3} (3 sd = {:.3})", 3.0 * sd),
    )
}

fn reduced_explicit_config() -> NetworkConfig<f64> {
    let mut cfg = presets::table2().with_bands(1);
    let lambda_bs = 25.0 / 64e6; // 25 stations over an 8 km torus
    cfg.lambda_bs = lambda_bs;
    cfg.lambda_iot = 2_000.0 * lambda_bs;
    cfg.lambda_inc = 2.8 * lambda_bs;
    cfg
}

/// The explicit train/channel fidelity and the pre-thinned fidelity must
/// estimate the same success probability.
pub fn explicit_vs_thinned(opts: &CheckOptions) -> CheckReport {
    let realizations = if opts.quick { 1_500 } else { 6_000 };
    let cfg = reduced_explicit_config();
    let spec = ProtocolSpec::uniform(
        ProtocolKind::Existing,
        RepetitionScheme::Random,
        Association::NoAssociation,
        1,
    );
    let base = SimOptions {
        mode: SimMode::Thinned,
        torus_side_m: 8_000.0,
        realizations,
        master_seed: opts.seed,
        include_noise: false,
    };
    let thinned = estimate_success_probability(&cfg, &spec, &base).unwrap();
    let explicit = estimate_success_probability(
        &cfg,
        &spec,
        &SimOptions {
            mode: SimMode::ExplicitSlots,
            ..base
        },
    )
    .unwrap();
    let gap = (thinned.value - explicit.value).abs();
    let budget = thinned.ci_half + explicit.ci_half;
    CheckReport::new(
        "explicit-vs-thinned",
        gap <= budget,
        format!(
            "thinned {:.4} vs explicit {:.4}; |diff| {gap:.4} <= {budget:.4}",
            thinned.value, explicit.value
        ),
    )
}

/// At the canonical parameters the noise term is 16 orders of magnitude
/// below the IoT signal; including it must not move estimates.
pub fn noise_negligibility(opts: &CheckOptions) -> CheckReport {
    let realizations = if opts.quick { 1_500 } else { 5_000 };
    let cfg = presets::table2();
    let spec = ProtocolSpec::uniform(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
        cfg.bands,
    );
    let mut sim = SimOptions::<f64> {
        realizations,
        master_seed: opts.seed,
        ..SimOptions::default()
    };
    sim.include_noise = false;
    let without = estimate_success_probability(&cfg, &spec, &sim).unwrap();
    sim.include_noise = true;
    let with = estimate_success_probability(&cfg, &spec, &sim).unwrap();
    let shift = (with.value - without.value).abs();
    CheckReport::new(
        "noise-negligibility",
        shift < 1e-3,
        format!(
            "estimate moved by {shift:.2e} when enabling noise ({} realizations)",
            realizations
        ),
    )
}

/// Doubling the torus side must not move estimates beyond the summed
/// confidence widths (wrap-around neutrality).
pub fn torus_doubling(opts: &CheckOptions) -> CheckReport {
    let realizations = if opts.quick { 3_000 } else { 10_000 };
    let cfg = presets::table2();
    let spec = ProtocolSpec::uniform(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
        cfg.bands,
    );
    let base = SimOptions::<f64> {
        realizations,
        master_seed: opts.seed,
        ..SimOptions::default()
    };
    let small = estimate_success_probability(&cfg, &spec, &base).unwrap();
    let doubled = SimOptions {
        torus_side_m: base.torus_side_m * 2.0,
        ..base
    };
    let large = estimate_success_probability(&cfg, &spec, &doubled).unwrap();
    let gap = (small.value - large.value).abs();
    let budget = small.ci_half + large.ci_half;
    CheckReport::new(
        "torus-doubling",
        gap <= budget,
        format!(
            "side {:.0} km: {:.4}; side {:.0} km: {:.4}; |diff| {gap:.4} <= {budget:.4}",
            base.torus_side_m / 1e3,
            small.value,
            doubled.torus_side_m / 1e3,
            large.value
        ),
    )
}

/// Monte-Carlo estimates against every closed form over the threshold grid.
pub fn analytic_vs_mc(opts: &CheckOptions) -> CheckReport {
    let (realizations, tolerance, taus_db): (u32, f64, &[f64]) = if opts.quick {
        (2_500, 0.04, &[0.0, 5.0])
    } else {
        (10_000, 0.015, &[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    };
    let base = presets::table2();
    let combos = if opts.quick {
        vec![
            (
                ProtocolKind::Existing,
                RepetitionScheme::Random,
                Association::NoAssociation,
            ),
            (
                ProtocolKind::Benchmark,
                RepetitionScheme::Random,
                Association::NearestBs,
            ),
            (
                ProtocolKind::SlottedMultiband,
                RepetitionScheme::Random,
                Association::NoAssociation,
            ),
            (
                ProtocolKind::UnslottedMultiband,
                RepetitionScheme::Random,
                Association::NoAssociation,
            ),
        ]
    } else {
        closed_form_combos()
    };
    let grid: Vec<f64> = taus_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for (kind, scheme, assoc) in combos {
        let cfg = if kind == ProtocolKind::Existing {
            base.with_bands(1)
        } else {
            base.clone()
        };
        let spec = ProtocolSpec::uniform(kind, scheme, assoc, cfg.bands);
        let sim = SimOptions::<f64> {
            realizations,
            master_seed: opts.seed,
            ..SimOptions::default()
        };
        let curve = match sinr_cdf(&cfg, &spec, &sim, &grid) {
            Ok(c) => c,
            Err(e) => {
                return CheckReport::new("analytic-vs-mc", false, format!("simulation: {e}"))
            }
        };
        for (tau_db, est) in taus_db.iter().zip(&curve) {
            let analytic =
                success_probability(&cfg.with_tau(10f64.powf(tau_db / 10.0)), &spec).unwrap();
            let gap = (est.value - analytic).abs();
            if gap > worst {
                worst = gap;
                worst_at = format!(
                    "{}/{}/{} at {} dB",
                    kind.label(),
                    scheme.label(),
                    assoc.label(),
                    tau_db
                );
            }
        }
    }
    CheckReport::new(
        "analytic-vs-mc",
        worst <= tolerance,
        format!(
            "worst |mc - analytic| = {worst:.4} ({worst_at}) vs tolerance {tolerance} \
             at {realizations} realizations"
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CheckOptions {
        CheckOptions {
            quick: true,
            ..CheckOptions::default()
        }
    }

    #[test]
    fn fast_analytic_checks_pass() {
        for report in [
            harmonic_ratio_decreasing(),
            composition_enumeration(),
            jensen_ordering(&quick()),
            uniform_band_optimality(&quick()),
            pgfl_quadrature(&quick()),
            nearest_term_quadrature(&quick()),
            capacity_inversion(),
        ] {
            assert!(report.passed, "{}: {}", report.name, report.detail);
        }
    }

    #[test]
    fn ks_check_passes() {
        let r = nearest_distance_ks(&quick());
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn corrupted_xi_is_caught() {
        let mut opts = quick();
        opts.xi_scale = 1.001;
        assert!(!pgfl_quadrature(&opts).passed);
        assert!(!nearest_term_quadrature(&opts).passed);
    }

    #[test]
    fn simpson_integrates_known_functions() {
        let gauss = simpson(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12, 40);
        assert!((gauss - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-10);
        let poly = simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12, 40);
        assert!((poly - 4.0).abs() < 1e-12);
    }
}
