//! Small geometry kernel: 3D vectors, axis-aligned rectilinear polygons in
//! the plan view, and ray/rectangle intersection for shading and view
//! factors.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm2())
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self.scale(-1.0)
    }
}

/// An oriented rectangle in 3D: `origin + a*edge_u + b*edge_v`, a,b in [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect3 {
    pub origin: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl Rect3 {
    pub fn area(&self) -> f64 {
        self.edge_u.cross(self.edge_v).norm()
    }

    pub fn normal(&self) -> Vec3 {
        self.edge_u.cross(self.edge_v).normalized()
    }

    pub fn center(&self) -> Vec3 {
        self.origin + self.edge_u * 0.5 + self.edge_v * 0.5
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.origin + self.edge_u * a + self.edge_v * b
    }

    /// Intersects the segment `p + t*d`, `t` in `(t_min, t_max)`, against the
    /// rectangle. Returns the parameter of the hit, if any.
    pub fn intersect_segment(&self, p: Vec3, d: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let n = self.edge_u.cross(self.edge_v);
        let denom = n.dot(d);
        if libm::fabs(denom) < 1e-14 {
            return None;
        }
        let t = n.dot(self.origin - p) / denom;
        if t <= t_min || t >= t_max {
            return None;
        }
        let q = p + d * t - self.origin;
        let a = q.dot(self.edge_u) / self.edge_u.norm2();
        if !(-GEOM_EPS..=1.0 + GEOM_EPS).contains(&a) {
            return None;
        }
        let b = q.dot(self.edge_v) / self.edge_v.norm2();
        if !(-GEOM_EPS..=1.0 + GEOM_EPS).contains(&b) {
            return None;
        }
        Some(t)
    }
}

/// Axis-aligned rectangle in the plan view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect2 {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect2 {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Signed area of a polygon (positive when counter-clockwise).
pub fn polygon_signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

pub fn polygon_perimeter(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        acc += libm::hypot(x1 - x0, y1 - y0);
    }
    acc
}

/// True when every edge is horizontal or vertical and no edge is degenerate.
pub fn polygon_is_rectilinear(poly: &[[f64; 2]]) -> bool {
    if poly.len() < 4 {
        return false;
    }
    let n = poly.len();
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        let dx = libm::fabs(x1 - x0);
        let dy = libm::fabs(y1 - y0);
        let horizontal = dy < GEOM_EPS && dx > GEOM_EPS;
        let vertical = dx < GEOM_EPS && dy > GEOM_EPS;
        if !horizontal && !vertical {
            return false;
        }
    }
    true
}

/// Simplicity check for rectilinear polygons: no two non-adjacent edges may
/// touch or cross.
pub fn polygon_is_simple_rectilinear(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let a0 = poly[i];
            let a1 = poly[(i + 1) % n];
            let b0 = poly[j];
            let b1 = poly[(j + 1) % n];
            if axis_segments_touch(a0, a1, b0, b1) {
                return false;
            }
        }
    }
    true
}

fn axis_segments_touch(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> bool {
    let (ax0, ax1) = minmax(a0[0], a1[0]);
    let (ay0, ay1) = minmax(a0[1], a1[1]);
    let (bx0, bx1) = minmax(b0[0], b1[0]);
    let (by0, by1) = minmax(b0[1], b1[1]);
    ax0 <= bx1 + GEOM_EPS
        && bx0 <= ax1 + GEOM_EPS
        && ay0 <= by1 + GEOM_EPS
        && by0 <= ay1 + GEOM_EPS
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Even-odd point-in-polygon test (crossing number).
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % n];
        if (y0 > p[1]) != (y1 > p[1]) {
            let xc = x0 + (p[1] - y0) / (y1 - y0) * (x1 - x0);
            if p[0] < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Interior y-intervals of a rectilinear polygon cut by the vertical line
/// `x = xm`. `xm` must not coincide with a vertex abscissa.
pub fn cross_section_y(poly: &[[f64; 2]], xm: f64) -> Vec<(f64, f64)> {
    let n = poly.len();
    let mut ys: Vec<f64> = Vec::new();
    for i in 0..n {
        let [x0, y0] = poly[i];
        let [x1, _y1] = poly[(i + 1) % n];
        // horizontal edges spanning xm
        let (lo, hi) = minmax(x0, x1);
        if libm::fabs(poly[(i + 1) % n][1] - y0) < GEOM_EPS && lo < xm && xm < hi {
            ys.push(y0);
        }
    }
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ys.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

/// Decomposes a rectilinear polygon into disjoint axis-aligned rectangles by
/// vertical strips.
pub fn decompose_rectilinear(poly: &[[f64; 2]]) -> Vec<Rect2> {
    let mut xs: Vec<f64> = poly.iter().map(|p| p[0]).collect();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| libm::fabs(*a - *b) < GEOM_EPS);
    let mut rects = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let xm = 0.5 * (x0 + x1);
        for (y0, y1) in cross_section_y(poly, xm) {
            rects.push(Rect2 { x0, y0, x1, y1 });
        }
    }
    rects
}

/// Rectangle cover of `region` minus the union of the given polygons.
pub fn free_region_rects(region: Rect2, polys: &[&[[f64; 2]]]) -> Vec<Rect2> {
    let mut xs: Vec<f64> = polys
        .iter()
        .flat_map(|p| p.iter().map(|v| v[0]))
        .filter(|&x| x > region.x0 + GEOM_EPS && x < region.x1 - GEOM_EPS)
        .collect();
    xs.push(region.x0);
    xs.push(region.x1);
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| libm::fabs(*a - *b) < GEOM_EPS);

    let mut rects = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let xm = 0.5 * (x0 + x1);
        // occupied y-intervals in this strip
        let mut occupied: Vec<(f64, f64)> = Vec::new();
        for p in polys {
            occupied.extend(cross_section_y(p, xm));
        }
        let free = subtract_intervals((region.y0, region.y1), &occupied);
        for (y0, y1) in free {
            rects.push(Rect2 { x0, y0, x1, y1 });
        }
    }
    rects
}

/// Subtracts a set of intervals from `base`, returning the remaining pieces.
pub fn subtract_intervals(base: (f64, f64), cuts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<(f64, f64)> = cuts
        .iter()
        .filter_map(|&(a, b)| {
            let a = a.max(base.0);
            let b = b.min(base.1);
            (b - a > GEOM_EPS).then_some((a, b))
        })
        .collect();
    cuts.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::new();
    let mut cursor = base.0;
    for (a, b) in cuts {
        if a > cursor + GEOM_EPS {
            out.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if base.1 > cursor + GEOM_EPS {
        out.push((cursor, base.1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shoelace_ccw_rectangle() {
        let poly = [[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]];
        assert_eq!(polygon_signed_area(&poly), 12.0);
        assert_eq!(polygon_perimeter(&poly), 14.0);
        assert!(polygon_is_rectilinear(&poly));
        assert!(polygon_is_simple_rectilinear(&poly));
    }

    #[test]
    fn l_shape_decomposition_covers_area() {
        let poly = [
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ];
        assert!(polygon_is_simple_rectilinear(&poly));
        let rects = decompose_rectilinear(&poly);
        let total: f64 = rects.iter().map(Rect2::area).sum();
        assert!((total - polygon_signed_area(&poly)).abs() < 1e-12);
    }

    #[test]
    fn self_touching_polygon_rejected() {
        // bow-tie-like rectilinear contour touching itself at (1,1)
        let poly = [
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [2.0, 2.0],
            [2.0, 3.0],
            [0.0, 3.0],
            [0.0, 2.0],
            [1.0, 2.0],
            [1.0, 1.0],
            [0.0, 1.0],
        ];
        assert!(!polygon_is_simple_rectilinear(&poly));
    }

    #[test]
    fn free_region_around_building() {
        let region = Rect2 {
            x0: 0.0,
            y0: 0.0,
            x1: 10.0,
            y1: 10.0,
        };
        let b = [[2.0, 2.0], [8.0, 2.0], [8.0, 8.0], [2.0, 8.0]];
        let rects = free_region_rects(region, &[&b[..]]);
        let total: f64 = rects.iter().map(Rect2::area).sum();
        assert!((total - (100.0 - 36.0)).abs() < 1e-12);
    }

    #[test]
    fn segment_rectangle_hit() {
        let r = Rect3 {
            origin: Vec3::new(0.0, 0.0, 0.0),
            edge_u: Vec3::new(2.0, 0.0, 0.0),
            edge_v: Vec3::new(0.0, 2.0, 0.0),
        };
        let p = Vec3::new(1.0, 1.0, 1.0);
        let d = Vec3::new(0.0, 0.0, -2.0);
        let t = r.intersect_segment(p, d, 1e-9, 1.0).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        // miss: parallel ray
        assert!(r
            .intersect_segment(p, Vec3::new(1.0, 0.0, 0.0), 1e-9, 1.0)
            .is_none());
    }
}
