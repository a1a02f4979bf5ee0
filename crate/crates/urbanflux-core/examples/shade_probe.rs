//! Prints per-facet direct illumination for studied layer-1 wall facets of
//! the regular slabs at selected hours, for hand verification of shading.

use urbanflux_core::clock::Instant;
use urbanflux_core::morphology::{facetize, generate_case, tile, CaseKind};
use urbanflux_core::radiation::{
    shadow_fractions, sun_position, AccelGrid, FacetKind, SurfaceProps,
};

fn main() {
    let start = Instant::from_civil(2015, 1, 3, 0, 0, 0);
    let scene = tile(&generate_case(CaseKind::UnevenOpenBlock), 3, 3).unwrap();
    let facets = facetize(&scene, &SurfaceProps::default());
    let grid = AccelGrid::build(&facets);
    for hour in [10i64, 12, 14] {
        let t = start.add_seconds(hour * 3600);
        let sun = sun_position(t, 47.56, 0.0);
        println!(
            "hour {hour}: sun dir e {:+.3} n {:+.3} up {:+.3}",
            sun.dir.x, sun.dir.y, sun.dir.z
        );
        let shadow = shadow_fractions(&facets, &grid, sun.dir);
        for (i, f) in facets.iter().enumerate() {
            let owner = match f.owner {
                Some(z) => z,
                None => continue,
            };
            if f.layer != 0 || f.kind != FacetKind::Wall {
                continue;
            }
            // studied zones sit in the central tile
            let c = f.rect.center();
            if !(0.0..=100.0).contains(&c.x) || !(0.0..=200.0).contains(&c.y) {
                continue;
            }
            let cosi = f.normal.dot(sun.dir).max(0.0);
            if cosi <= 0.0 {
                continue;
            }
            println!(
                "  b{} s{} center ({:5.1},{:5.1},{:4.1}) n ({:+.0},{:+.0}) area {:5.0} cos {:.3} lit {:.2}",
                owner.building,
                owner.storey,
                c.x,
                c.y,
                c.z,
                f.normal.x,
                f.normal.y,
                f.area,
                cosi,
                shadow[i]
            );
        }
    }
}
