//! Scratch driver for eyeballing case-level behavior during development.

use std::time::Instant as WallClock;

use urbanflux_core::morphology::{generate_case, tile, CaseKind};
use urbanflux_core::simulation::{run, synth_weather, RunConfig, RunResults};

fn ld(r: &RunResults, k: usize) -> f64 {
    if k < r.n_canopy {
        r.layer_demand(k)
    } else {
        0.0
    }
}

fn ls(r: &RunResults, k: usize) -> f64 {
    r.layer_solar.get(k).copied().unwrap_or(0.0)
}

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let mut config = RunConfig::default();
    if let Some(&v) = args.first() {
        config.t_sky_offset = v;
    }
    if let Some(&v) = args.get(1) {
        config.ground_release_fraction = v;
    }
    let q_internal = args.get(2).copied().unwrap_or(5.0);
    if let Some(&v) = args.get(3) {
        config.diffusivity.shape = v;
    }
    let eta = args.get(4).copied().unwrap_or(0.15);
    let q_min = args.get(5).copied().unwrap_or(-100.0);
    let k_int = args.get(6).copied().unwrap_or(0.15);
    let k_ext = args.get(7).copied().unwrap_or(0.15);
    if let Some(&v) = args.get(8) {
        config.spinup_days = v as usize;
    }
    let k_r = args.get(9).copied();
    println!(
        "t_sky_offset {}  ground_release_fraction {}  q_internal {}  shape {}  eta {}  q_min {}",
        config.t_sky_offset, config.ground_release_fraction, q_internal, config.diffusivity.shape, eta, q_min
    );
    let weather = synth_weather(config.start, config.latitude_deg);
    let mut results = Vec::new();
    for kind in CaseKind::ALL {
        let t0 = WallClock::now();
        let mut scene = generate_case(kind);
        for set in scene.zone_params.values_mut() {
            set.q_internal = q_internal;
            set.eta = eta;
            set.control.q_min = q_min;
            set.k_int = k_int;
            set.k_ext = k_ext;
            set.k_r = k_r.unwrap_or(k_ext);
        }
        let tiled = tile(&scene, 3, 3).unwrap();
        let r = run(&tiled, &weather, &config).unwrap();
        println!(
            "{:<18} wall {:6.1?}  heat {:8.2} cool {:8.2} demand {:8.2} solar {:8.2} diss {:8.2} Wh/m2  audit {:.2e}",
            kind.name(),
            t0.elapsed(),
            r.total_heating(),
            r.total_cooling(),
            r.total_demand(),
            r.total_solar(),
            r.total_dissipation(),
            r.audit.residual_relative(),
        );
        results.push((kind, r));
    }
    let base = results[0].1.total_demand();
    let base_h = results[0].1.total_heating();
    for (kind, r) in &results {
        println!(
            "{:<18} demand rel {:+6.2}%  heat rel {:+6.2}%  layer1 demand {:7.2}  layer10 demand {:7.2}  solar L-mean {:7.2}",
            kind.name(),
            (r.total_demand() - base) / base * 100.0,
            (r.total_heating() - base_h) / base_h * 100.0,
            ld(r, 0),
            ld(r, 9),
            r.layer_solar.iter().sum::<f64>() / r.layer_solar.len() as f64,
        );
    }
    {
        let s = &results[0].1;
        let u = &results[3].1;
        let adv = |k: usize| (ld(s, k) - ld(u, k)) / ld(s, k);
        let spread = |hour: usize, k: usize| {
            let vals: Vec<f64> = results
                .iter()
                .map(|(_, r)| r.canopy_at_hour(hour).unwrap()[k])
                .collect();
            let mx = vals.iter().cloned().fold(f64::MIN, f64::max);
            let mn = vals.iter().cloned().fold(f64::MAX, f64::min);
            mx - mn
        };
        let morning_max = (0..10).map(|k| spread(5, k)).fold(0.0f64, f64::max);
        let l0_15: Vec<f64> = results
            .iter()
            .map(|(_, r)| r.canopy_at_hour(15).unwrap()[0])
            .collect();
        println!(
            "\ncrit: adv L1 {:+.1}%  adv L10 {:+.1}%  4d {}  morning max spread {:.2} K  15h L0 spread {:.2} K  15h L0 order {}",
            adv(0) * 100.0,
            adv(9) * 100.0,
            if adv(0) > adv(9) { "PASS" } else { "FAIL" },
            morning_max,
            spread(15, 0),
            if l0_15[0] > l0_15[1] && l0_15[1] > l0_15[2] && l0_15[2] > l0_15[3] {
                "PASS"
            } else {
                "FAIL"
            },
        );
    }
    println!("\ncanopy profiles (layers 0..9 + above, K):");
    for hour in [5usize, 15] {
        println!("hour {hour:02}:00, forcing {:.2}", weather.records[hour].t_atm);
        for (kind, r) in &results {
            let prof = r.canopy_at_hour(hour).unwrap();
            let s: Vec<String> = prof.iter().take(12).map(|t| format!("{:6.2}", t)).collect();
            println!("  {:<18} {}", kind.name(), s.join(" "));
        }
    }
    println!("\nlayer heat demand (Wh/m2), slabs vs uneven:");
    for k in 0..10 {
        println!(
            "  layer {:2}: slabs {:7.2}  convex {:7.2}  even {:7.2}  uneven {:7.2}",
            k + 1,
            ld(&results[0].1, k),
            ld(&results[1].1, k),
            ld(&results[2].1, k),
            ld(&results[3].1, k),
        );
    }
    println!("\nlayer solar (Wh/m2):");
    for k in 0..10 {
        println!(
            "  layer {:2}: slabs {:7.2}  convex {:7.2}  even {:7.2}  uneven {:7.2}",
            k + 1,
            ls(&results[0].1, k),
            ls(&results[1].1, k),
            ls(&results[2].1, k),
            ls(&results[3].1, k),
        );
    }
}
