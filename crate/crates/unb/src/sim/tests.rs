use super::*;
use crate::analytic::success_probability;
use crate::config::presets;

fn table2_spec(
    kind: ProtocolKind,
    scheme: RepetitionScheme,
    assoc: Association,
) -> (NetworkConfig<f64>, ProtocolSpec<f64>) {
    let cfg = presets::table2();
    let cfg = if kind == ProtocolKind::Existing {
        cfg.with_bands(1)
    } else {
        cfg
    };
    let spec = ProtocolSpec::uniform(kind, scheme, assoc, cfg.bands);
    (cfg, spec)
}

fn quick_opts(realizations: u32, seed: u64) -> SimOptions<f64> {
    SimOptions {
        mode: SimMode::Thinned,
        torus_side_m: 40_000.0,
        realizations,
        master_seed: seed,
        include_noise: false,
    }
}

#[test]
fn no_interferers_without_noise_always_succeeds_with_a_station() {
    let (mut cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    cfg.lambda_iot = 0.0;
    cfg.lambda_inc = 0.0;
    let opts = quick_opts(50, 3);
    for i in 0..50 {
        let s = simulate_realization(&cfg, &spec, &opts, i).unwrap();
        let has_station = !sample_realization(&cfg, &spec, &opts, i).unwrap().bs.is_empty();
        assert_eq!(s.success, has_station, "realization {i}");
        if has_station {
            assert!(s.max_sinr.is_infinite());
        }
    }
}

#[test]
fn no_stations_means_failure() {
    let (mut cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    cfg.lambda_bs = 0.0;
    let opts = quick_opts(5, 4);
    for i in 0..5 {
        let s = simulate_realization(&cfg, &spec, &opts, i).unwrap();
        assert!(!s.success);
        assert_eq!(s.max_sinr, f64::NEG_INFINITY);
        assert!(s.per_message.iter().all(|m| m.is_empty()));
    }
}

#[test]
fn estimates_are_deterministic_and_schedule_independent() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let opts = quick_opts(400, 9);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_success_probability(&cfg, &spec, &opts).unwrap());
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| estimate_success_probability(&cfg, &spec, &opts).unwrap());
    assert_eq!(single, multi);
}

#[test]
fn repeated_runs_reproduce_bitwise() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::SlottedMultiband,
        RepetitionScheme::Random,
        Association::NearestBs,
    );
    let opts = quick_opts(300, 11);
    let a = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    let b = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pn_shares_one_interferer_set_across_copies() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Pn,
        Association::NoAssociation,
    );
    let opts = quick_opts(3, 13);
    let world = sample_realization(&cfg, &spec, &opts, 0).unwrap();
    assert!(world.iot_shared.is_some());
    assert!(world.iot_per_message.is_empty());
    // incumbents still refresh per copy
    assert_eq!(world.inc_per_message.len(), cfg.repetitions as usize);
}

#[test]
fn random_scheme_draws_fresh_sets_per_copy() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let opts = quick_opts(3, 14);
    let world = sample_realization(&cfg, &spec, &opts, 0).unwrap();
    assert!(world.iot_shared.is_none());
    assert_eq!(world.iot_per_message.len(), cfg.repetitions as usize);
}

#[test]
fn thinned_interferer_counts_have_the_right_mean() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let opts = quick_opts(2_000, 15);
    let area = opts.torus_side_m * opts.torus_side_m;
    let d = cfg.derived();
    let expected = d.lambda_iot_thinned * area;
    let mut total = 0usize;
    let mut copies = 0usize;
    for i in 0..opts.realizations {
        let world = sample_realization(&cfg, &spec, &opts, i).unwrap();
        for set in &world.iot_per_message {
            total += set.len();
            copies += 1;
        }
    }
    let mean = total as f64 / copies as f64;
    // Poisson counts: sd of the mean is sqrt(lambda / n)
    let sd = (expected / copies as f64).sqrt();
    assert!(
        (mean - expected).abs() <= 3.0 * sd,
        "mean interferers {mean} vs expected {expected} (sd {sd})"
    );
}

#[test]
fn cdf_is_monotone_and_consistent_with_point_estimate() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let opts = quick_opts(1_500, 16);
    let grid_db = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0];
    let grid: Vec<f64> = grid_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let curve = sinr_cdf(&cfg, &spec, &opts, &grid).unwrap();
    for pair in curve.windows(2) {
        assert!(pair[0].value >= pair[1].value, "CDF must be non-increasing");
    }
    // the 5 dB entry must match a direct estimate at the same threshold
    // up to the different listening radius (driven by the grid minimum)
    let direct = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    let at_5db = curve[3];
    assert!(
        (at_5db.value - direct.value).abs() <= at_5db.ci_half + direct.ci_half,
        "cdf {} vs direct {}",
        at_5db.value,
        direct.value
    );
}

#[test]
fn degenerate_all_success_case_reports_tight_interval() {
    let (mut cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    cfg.lambda_iot = 0.0;
    cfg.lambda_inc = 0.0;
    cfg.lambda_bs = 1e-6; // ~1600 stations on the quick torus: always one
    let opts = quick_opts(400, 17);
    let est = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    assert_eq!(est.value, 1.0);
    assert!(est.ci_half < 0.02, "wilson width {}", est.ci_half);
}

#[test]
fn bad_tau_grids_are_rejected() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let opts = quick_opts(10, 18);
    assert!(matches!(
        sinr_cdf(&cfg, &spec, &opts, &[]).unwrap_err(),
        SimError::BadTauGrid
    ));
    assert!(matches!(
        sinr_cdf(&cfg, &spec, &opts, &[2.0, 1.0]).unwrap_err(),
        SimError::BadTauGrid
    ));
}

#[test]
fn wilson_width_shrinks_with_sample_size() {
    let w1 = wilson_half_width(50, 100);
    let w2 = wilson_half_width(5_000, 10_000);
    assert!(w1 > w2);
    assert!(w2 > 0.0 && w2 < 0.011);
}

#[test]
fn expected_station_warning_fires_on_small_torus() {
    let (cfg, _) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let mut opts = quick_opts(100, 1);
    opts.torus_side_m = 5_000.0; // 1 expected station
    assert!(!opts.warnings(&cfg).is_empty());
    opts.torus_side_m = 40_000.0; // 64 expected stations
    assert!(opts.warnings(&cfg).is_empty());
}

#[test]
fn quick_benchmark_estimate_tracks_closed_form() {
    // Smoke-level agreement; the acceptance suite runs the full grid.
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let mut opts = quick_opts(2_000, 19);
    opts.torus_side_m = 100_000.0;
    let est = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    let analytic = success_probability(&cfg, &spec).unwrap();
    assert!(
        (est.value - analytic).abs() <= 0.035,
        "mc {} vs analytic {analytic}",
        est.value
    );
}

#[test]
fn nearest_association_estimate_tracks_closed_form() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NearestBs,
    );
    let mut opts = quick_opts(2_000, 20);
    opts.torus_side_m = 100_000.0;
    let est = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    let analytic = success_probability(&cfg, &spec).unwrap();
    assert!(
        (est.value - analytic).abs() <= 0.035,
        "mc {} vs analytic {analytic}",
        est.value
    );
}

#[test]
fn explicit_mode_runs_the_existing_protocol() {
    let (mut cfg, spec) = table2_spec(
        ProtocolKind::Existing,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    // shrink the device population so explicit trains stay cheap
    cfg.lambda_iot = cfg.lambda_bs * 2_000.0;
    let opts = SimOptions {
        mode: SimMode::ExplicitSlots,
        torus_side_m: 20_000.0,
        realizations: 50,
        master_seed: 23,
        include_noise: false,
    };
    let world = sample_realization(&cfg, &spec, &opts, 0).unwrap();
    assert!(world.explicit_tx.is_some());
    let est = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    assert!(est.value > 0.0 && est.value <= 1.0);
}

#[test]
fn noise_inclusion_barely_moves_canonical_estimates() {
    let (cfg, spec) = table2_spec(
        ProtocolKind::Benchmark,
        RepetitionScheme::Random,
        Association::NoAssociation,
    );
    let mut opts = quick_opts(2_000, 25);
    opts.include_noise = false;
    let without = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    opts.include_noise = true;
    let with = estimate_success_probability(&cfg, &spec, &opts).unwrap();
    assert!(
        (with.value - without.value).abs() < 1e-3,
        "noise shifted the estimate from {} to {}",
        without.value,
        with.value
    );
}
