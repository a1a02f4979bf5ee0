//! Identifies the facet blocking a specific sun ray.

use urbanflux_core::clock::Instant;
use urbanflux_core::morphology::{facetize, generate_case, tile, CaseKind};
use urbanflux_core::radiation::{sun_position, SurfaceProps};

fn main() {
    let start = Instant::from_civil(2015, 1, 3, 0, 0, 0);
    let scene = tile(&generate_case(CaseKind::UnevenOpenBlock), 3, 3).unwrap();
    let facets = facetize(&scene, &SurfaceProps::default());
    let t = start.add_seconds(12 * 3600);
    let sun = sun_position(t, 47.56, 0.0);
    // b48 south face sample: x25, y10, z1.5 looking sunward
    let p = urbanflux_core::geom::Vec3::new(25.0, 10.0, 1.5);
    let d = sun.dir * 4.0e3;
    for (i, f) in facets.iter().enumerate() {
        if let Some(tt) = f.rect.intersect_segment(p, d, 1e-7, 1.0 - 1e-7) {
            let hit = p + d * tt;
            println!(
                "facet {i} kind {:?} owner {:?} layer {} hit ({:.1},{:.1},{:.1}) origin ({:.1},{:.1},{:.1}) n ({:+.1},{:+.1},{:+.1}) area {:.0}",
                f.kind, f.owner, f.layer, hit.x, hit.y, hit.z,
                f.rect.origin.x, f.rect.origin.y, f.rect.origin.z,
                f.normal.x, f.normal.y, f.normal.z, f.area
            );
        }
    }
    println!("done");
}
