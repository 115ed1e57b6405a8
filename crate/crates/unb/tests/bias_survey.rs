//! Diagnostic: systematic Monte-Carlo vs closed-form residuals as a function
//! of torus size. Slow; run on demand:
//!
//! `cargo test -p unb --test bias_survey -- --ignored --nocapture`

use unb::analytic::{closed_form_combos, success_probability};
use unb::config::presets;
use unb::model::ProtocolKind;
use unb::sim::{estimate_success_probability, SimMode, SimOptions};
use unb::{NetworkConfig, ProtocolSpec};

fn run_cell(
    cfg: &NetworkConfig<f64>,
    spec: &ProtocolSpec<f64>,
    side: f64,
    realizations: u32,
    seed: u64,
) -> (f64, f64, f64) {
    let opts = SimOptions {
        mode: SimMode::Thinned,
        torus_side_m: side,
        realizations,
        master_seed: seed,
        include_noise: false,
    };
    let est = estimate_success_probability(cfg, spec, &opts).unwrap();
    let analytic = success_probability(cfg, spec).unwrap();
    (est.value, analytic, est.ci_half)
}

#[test]
#[ignore]
fn torus_size_bias_survey() {
    let base = presets::table2();
    for side in [25_000.0, 50_000.0, 100_000.0, 150_000.0] {
        println!("== torus side {} km ==", side / 1000.0);
        for (kind, scheme, assoc) in closed_form_combos() {
            let cfg = if kind == ProtocolKind::Existing {
                base.with_bands(1)
            } else {
                base.clone()
            };
            let spec = ProtocolSpec::uniform(kind, scheme, assoc, cfg.bands);
            let (mc, an, ci) = run_cell(&cfg, &spec, side, 40_000, 0xBEEF);
            println!(
                "{:>12} {:>6} {:>7}  mc {:.4}  analytic {:.4}  diff {:+.4}  ci {:.4}",
                kind.label(),
                scheme.label(),
                assoc.label(),
                mc,
                an,
                mc - an,
                ci
            );
        }
    }
}

#[test]
#[ignore]
fn tau_grid_bias_survey() {
    let base = presets::table2();
    let taus_db = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    for side in [100_000.0, 150_000.0] {
        println!("== torus side {} km ==", side / 1000.0);
        for (kind, scheme, assoc) in closed_form_combos() {
            let cfg = if kind == ProtocolKind::Existing {
                base.with_bands(1)
            } else {
                base.clone()
            };
            let spec = ProtocolSpec::uniform(kind, scheme, assoc, cfg.bands);
            let opts = SimOptions {
                mode: SimMode::Thinned,
                torus_side_m: side,
                realizations: 40_000,
                master_seed: 0xBEEF,
                include_noise: false,
            };
            let grid: Vec<f64> = taus_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
            let curve = unb::sim::sinr_cdf(&cfg, &spec, &opts, &grid).unwrap();
            let mut worst = 0.0f64;
            let mut worst_tau = 0.0;
            for (tau_db, est) in taus_db.iter().zip(&curve) {
                let an = success_probability(&cfg.with_tau(10f64.powf(tau_db / 10.0)), &spec)
                    .unwrap();
                let d = (est.value - an).abs();
                if d > worst {
                    worst = d;
                    worst_tau = *tau_db;
                }
            }
            println!(
                "{:>12} {:>6} {:>7}  worst |diff| {:.4} at {} dB",
                kind.label(),
                scheme.label(),
                assoc.label(),
                worst,
                worst_tau
            );
        }
    }
}
