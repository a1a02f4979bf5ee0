//! Decomposes per-layer absorbed shortwave into direct and diffuse parts
//! for the reference morphologies across the day.

use urbanflux_core::clock::Instant;
use urbanflux_core::morphology::{facetize, generate_case, layer_stats, tile, CaseKind};
use urbanflux_core::radiation::{
    aggregate_zone_flux, shortwave, sun_position, view_factors_with, SkyModel, SurfaceProps,
};
use urbanflux_core::simulation::{city_vf_options, synth_weather};

fn main() {
    let start = Instant::from_civil(2015, 1, 3, 0, 0, 0);
    let weather = synth_weather(start, 47.56);
    let mut means: Vec<(CaseKind, f64, f64)> = Vec::new();
    for kind in CaseKind::ALL {
        let base = generate_case(kind);
        let floors: Vec<f64> = (0..10)
            .map(|k| layer_stats(&base, k).map(|s| s.s_f).unwrap_or(0.0))
            .collect();
        let roof_layer: Vec<bool> = (0..10)
            .map(|k| {
                layer_stats(&base, k)
                    .map(|s| s.s_r > 0.0)
                    .unwrap_or(false)
            })
            .collect();
        let scene = tile(&base, 3, 3).unwrap();
        let facets = facetize(&scene, &SurfaceProps::default());
        let vf = view_factors_with(&facets, &city_vf_options());
        let studied: Vec<bool> = scene.buildings.iter().map(|b| b.studied).collect();
        println!("{}: {} facets", kind.name(), facets.len());
        let mut direct = vec![0.0; 10];
        let mut diffuse = vec![0.0; 10];
        for rec in &weather.records[..24] {
            if rec.dni <= 0.0 {
                continue;
            }
            let sun = sun_position(rec.time, 47.56, 0.0);
            let zero = vec![0.0; facets.len()];
            for (dni, dhi, acc) in [(rec.dni, 0.0, &mut direct), (0.0, rec.dhi, &mut diffuse)] {
                let sky = SkyModel {
                    dni,
                    dhi,
                    t_sky: 260.0,
                    sun_dir: sun.dir,
                };
                let sw = shortwave(&facets, &vf, &sky).unwrap();
                let agg = aggregate_zone_flux(&facets, &sw, &zero, &studied, 10).unwrap();
                for k in 0..10 {
                    if floors[k] > 0.0 {
                        acc[k] += agg.layer_sw[k] / floors[k];
                    }
                }
            }
        }
        let mut all = 0.0;
        let mut all_n = 0usize;
        let mut nr = 0.0;
        let mut nr_n = 0usize;
        for k in 0..10 {
            if floors[k] <= 0.0 {
                continue;
            }
            let tot = direct[k] + diffuse[k];
            all += tot;
            all_n += 1;
            if !roof_layer[k] {
                nr += tot;
                nr_n += 1;
            }
            println!(
                "  layer {:2}: floor {:6.0}  roof {}  direct {:7.2}  diffuse {:7.2}  total {:7.2}",
                k + 1,
                floors[k],
                roof_layer[k] as u8,
                direct[k],
                diffuse[k],
                tot
            );
        }
        let m_all = all / all_n as f64;
        let m_nr = nr / nr_n.max(1) as f64;
        println!("  mean all layers {m_all:7.2}   mean roof-free layers {m_nr:7.2}");
        means.push((kind, m_all, m_nr));
    }
    let slab = means[0];
    for (kind, a, n) in &means {
        println!(
            "{:<18} factor-all {:5.2}  factor-rooffree {:5.2}",
            kind.name(),
            a / slab.1,
            n / slab.2
        );
    }
}
