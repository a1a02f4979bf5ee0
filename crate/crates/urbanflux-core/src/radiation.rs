//! Radiative exchange over the facetized scene: solar position, view
//! factors with occlusion, shortwave radiosity (direct, isotropic diffuse
//! sky and inter-reflections) and single-bounce longwave exchange with the
//! sky.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Instant;
use crate::constants::STEFAN_BOLTZMANN;
use crate::error::{ModelError, Result};
use crate::geom::{Rect2, Rect3, Vec3};
use crate::morphology::ZoneRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    Wall,
    Roof,
    Ground,
}

/// Optical surface properties applied at facetization time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceProps {
    pub albedo: f64,
    pub emissivity: f64,
}

impl Default for SurfaceProps {
    fn default() -> Self {
        SurfaceProps {
            albedo: 0.2,
            emissivity: 0.9,
        }
    }
}

/// One rectangular exchange surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub rect: Rect3,
    pub normal: Vec3,
    pub area: f64,
    pub kind: FacetKind,
    /// Owning zone; `None` for ground facets.
    pub owner: Option<ZoneRef>,
    pub layer: usize,
    pub albedo: f64,
    pub emissivity: f64,
}

impl Facet {
    /// Vertical wall facet from a plan-view span and a storey height.
    pub fn wall(origin: Vec3, span: Vec3, height: f64, owner: ZoneRef, props: &SurfaceProps) -> Facet {
        let rect = Rect3 {
            origin,
            edge_u: span,
            edge_v: Vec3::new(0.0, 0.0, height),
        };
        Facet {
            normal: rect.normal(),
            area: rect.area(),
            rect,
            kind: FacetKind::Wall,
            owner: Some(owner),
            layer: owner.storey,
            albedo: props.albedo,
            emissivity: props.emissivity,
        }
    }

    /// Horizontal facet (roof or ground) from a plan rectangle.
    pub fn horizontal(
        r: Rect2,
        z: f64,
        kind: FacetKind,
        owner: Option<ZoneRef>,
        layer: usize,
        props: &SurfaceProps,
    ) -> Facet {
        let rect = Rect3 {
            origin: Vec3::new(r.x0, r.y0, z),
            edge_u: Vec3::new(r.x1 - r.x0, 0.0, 0.0),
            edge_v: Vec3::new(0.0, r.y1 - r.y0, 0.0),
        };
        Facet {
            normal: Vec3::new(0.0, 0.0, 1.0),
            area: rect.area(),
            rect,
            kind,
            owner,
            layer,
            albedo: props.albedo,
            emissivity: props.emissivity,
        }
    }

    pub fn center(&self) -> Vec3 {
        self.rect.center()
    }
}

/// Sun direction (unit vector, x east, y north, z up) and angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunPosition {
    pub dir: Vec3,
    pub altitude_deg: f64,
    pub azimuth_deg: f64,
}

const DEG: f64 = core::f64::consts::PI / 180.0;

/// Declination/hour-angle solar position. Solar time is taken as UTC plus
/// `longitude / 15` hours; the equation of time is neglected (well inside
/// the 0.5 degree altitude budget for the uses here).
pub fn sun_position(time: Instant, latitude_deg: f64, longitude_deg: f64) -> SunPosition {
    let doy = time.day_of_year() as f64;
    let decl = 23.45 * DEG * libm::sin(2.0 * core::f64::consts::PI * (284.0 + doy) / 365.0);
    let solar_hour = time.hour_of_day() + longitude_deg / 15.0;
    let hour_angle = (solar_hour - 12.0) * 15.0 * DEG;
    let lat = latitude_deg * DEG;

    let up = libm::sin(lat) * libm::sin(decl) + libm::cos(lat) * libm::cos(decl) * libm::cos(hour_angle);
    let east = -libm::cos(decl) * libm::sin(hour_angle);
    let north = libm::sin(decl) * libm::cos(lat) - libm::cos(decl) * libm::cos(hour_angle) * libm::sin(lat);
    let dir = Vec3::new(east, north, up);
    SunPosition {
        dir,
        altitude_deg: libm::asin(up.clamp(-1.0, 1.0)) / DEG,
        azimuth_deg: libm::atan2(east, north) / DEG,
    }
}

/// Sky radiation boundary conditions for one radiation interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkyModel {
    /// Direct normal irradiance [W/m2].
    pub dni: f64,
    /// Diffuse horizontal irradiance [W/m2].
    pub dhi: f64,
    /// Radiative sky temperature [K].
    pub t_sky: f64,
    /// Unit vector toward the sun; `dni` must be zero below the horizon.
    pub sun_dir: Vec3,
}

// ---------------------------------------------------------------------------
// uniform-grid ray acceleration

pub struct AccelGrid {
    min: Vec3,
    cell: [f64; 3],
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl AccelGrid {
    pub fn build(facets: &[Facet]) -> AccelGrid {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut consider = |p: Vec3| {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            lo.z = lo.z.min(p.z);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
            hi.z = hi.z.max(p.z);
        };
        for f in facets {
            consider(f.rect.origin);
            consider(f.rect.point(1.0, 0.0));
            consider(f.rect.point(0.0, 1.0));
            consider(f.rect.point(1.0, 1.0));
        }
        let pad = 1e-6;
        lo = lo - Vec3::new(pad, pad, pad);
        hi = hi + Vec3::new(pad, pad, pad);
        let ext = hi - lo;
        let target_cell = 15.0;
        let dims = [
            ((ext.x / target_cell) as usize).clamp(1, 64),
            ((ext.y / target_cell) as usize).clamp(1, 64),
            ((ext.z / target_cell) as usize).clamp(1, 64),
        ];
        let cell = [
            ext.x / dims[0] as f64,
            ext.y / dims[1] as f64,
            ext.z / dims[2] as f64,
        ];
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for (id, f) in facets.iter().enumerate() {
            let corners = [
                f.rect.origin,
                f.rect.point(1.0, 0.0),
                f.rect.point(0.0, 1.0),
                f.rect.point(1.0, 1.0),
            ];
            let mut bmin = corners[0];
            let mut bmax = corners[0];
            for c in &corners[1..] {
                bmin.x = bmin.x.min(c.x);
                bmin.y = bmin.y.min(c.y);
                bmin.z = bmin.z.min(c.z);
                bmax.x = bmax.x.max(c.x);
                bmax.y = bmax.y.max(c.y);
                bmax.z = bmax.z.max(c.z);
            }
            let i0 = Self::cell_index_of(bmin - lo, cell, dims);
            let i1 = Self::cell_index_of(bmax - lo, cell, dims);
            for ix in i0[0]..=i1[0] {
                for iy in i0[1]..=i1[1] {
                    for iz in i0[2]..=i1[2] {
                        cells[(iz * dims[1] + iy) * dims[0] + ix].push(id as u32);
                    }
                }
            }
        }
        AccelGrid {
            min: lo,
            cell,
            dims,
            cells,
        }
    }

    fn cell_index_of(rel: Vec3, cell: [f64; 3], dims: [usize; 3]) -> [usize; 3] {
        [
            ((rel.x / cell[0]) as isize).clamp(0, dims[0] as isize - 1) as usize,
            ((rel.y / cell[1]) as isize).clamp(0, dims[1] as isize - 1) as usize,
            ((rel.z / cell[2]) as isize).clamp(0, dims[2] as isize - 1) as usize,
        ]
    }

    /// True when the open segment from `p` to `q` is blocked by any facet
    /// other than the two excluded ones. 3D-DDA cell walk.
    pub fn occluded(&self, facets: &[Facet], p: Vec3, q: Vec3, skip_a: usize, skip_b: usize) -> bool {
        let d = q - p;
        let mut idx = Self::cell_index_of(p - self.min, self.cell, self.dims);
        let end = Self::cell_index_of(q - self.min, self.cell, self.dims);

        let step = [sign(d.x), sign(d.y), sign(d.z)];
        let comp = |v: Vec3, a: usize| match a {
            0 => v.x,
            1 => v.y,
            _ => v.z,
        };
        // parametric distance to the next cell boundary per axis, and per-cell increment
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let da = comp(d, a);
            if da.abs() > 1e-14 {
                let cs = self.cell[a];
                let origin = comp(p - self.min, a);
                let boundary = if step[a] > 0 {
                    (idx[a] as f64 + 1.0) * cs
                } else {
                    idx[a] as f64 * cs
                };
                t_max[a] = (boundary - origin) / da;
                t_delta[a] = cs / da.abs();
            }
        }
        loop {
            let cell = &self.cells[(idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]];
            for &id in cell {
                let id = id as usize;
                if id == skip_a || id == skip_b {
                    continue;
                }
                if facets[id]
                    .rect
                    .intersect_segment(p, d, 1e-7, 1.0 - 1e-7)
                    .is_some()
                {
                    return true;
                }
            }
            if idx == end {
                return false;
            }
            // advance to the next cell
            let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[a] > 1.0 {
                return false;
            }
            let next = idx[a] as isize + step[a];
            if next < 0 || next >= self.dims[a] as isize {
                return false;
            }
            idx[a] = next as usize;
            t_max[a] += t_delta[a];
        }
    }
}

fn sign(v: f64) -> isize {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// view factors

/// Dense view-factor matrix with per-facet sky view factors.
#[derive(Debug, Clone)]
pub struct ViewFactorMatrix {
    n: usize,
    /// Row-major `F[i][j]`: fraction of diffuse radiation leaving i that
    /// arrives at j.
    pub f: Vec<f64>,
    pub f_sky: Vec<f64>,
}

impl ViewFactorMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i * self.n..(i + 1) * self.n]
    }
}

/// Accuracy knobs for the partially-occluded-pair area quadrature.
/// Unoccluded pairs use the exact contour double integral and are not
/// affected by these settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewFactorOptions {
    /// Subdivide while `max(patch area) > tau * distance^2`.
    pub tau: f64,
    /// Hard cap on kernel evaluations per facet pair.
    pub max_leaves: usize,
}

impl Default for ViewFactorOptions {
    fn default() -> Self {
        ViewFactorOptions {
            tau: 0.03,
            max_leaves: 10_000,
        }
    }
}

#[derive(Clone, Copy)]
struct Patch {
    rect: Rect3,
    area: f64,
}

impl Patch {
    fn split(&self) -> (Patch, Patch) {
        let u2 = self.rect.edge_u.norm2();
        let v2 = self.rect.edge_v.norm2();
        let half = self.area * 0.5;
        if u2 >= v2 {
            let hu = self.rect.edge_u * 0.5;
            let a = Rect3 {
                origin: self.rect.origin,
                edge_u: hu,
                edge_v: self.rect.edge_v,
            };
            let b = Rect3 {
                origin: self.rect.origin + hu,
                edge_u: hu,
                edge_v: self.rect.edge_v,
            };
            (Patch { rect: a, area: half }, Patch { rect: b, area: half })
        } else {
            let hv = self.rect.edge_v * 0.5;
            let a = Rect3 {
                origin: self.rect.origin,
                edge_u: self.rect.edge_u,
                edge_v: hv,
            };
            let b = Rect3 {
                origin: self.rect.origin + hv,
                edge_u: self.rect.edge_u,
                edge_v: hv,
            };
            (Patch { rect: a, area: half }, Patch { rect: b, area: half })
        }
    }
}

/// Restriction of `rect` to the half-space `n . (x - p) > 0`, or `None`
/// when (essentially) nothing remains. Exact when the plane is parallel to
/// one of the rect's edge directions — always the case for rectilinear
/// scenes; otherwise falls back to keeping the whole rect if any corner is
/// in front (the quadrature path still clamps the kernel pointwise).
fn clip_rect_halfspace(rect: &Rect3, p: Vec3, n: Vec3) -> Option<Rect3> {
    const EPS: f64 = 1e-9;
    let c0 = n.dot(rect.origin - p);
    let cu = n.dot(rect.edge_u);
    let cv = n.dot(rect.edge_v);
    let flat_u = cu.abs() < 1e-12;
    let flat_v = cv.abs() < 1e-12;
    if flat_u && flat_v {
        return if c0 > EPS { Some(*rect) } else { None };
    }
    if !flat_u && !flat_v {
        // oblique facet; keep conservatively if any corner is in front
        let front = [c0, c0 + cu, c0 + cv, c0 + cu + cv]
            .iter()
            .any(|v| *v > EPS);
        return if front { Some(*rect) } else { None };
    }
    // one parametric direction crosses the plane: f(s) = c0 + s * c
    let (c, along_u) = if flat_u { (cv, false) } else { (cu, true) };
    let s_at = (EPS - c0) / c;
    let (s0, s1) = if c > 0.0 {
        (s_at.max(0.0), 1.0)
    } else {
        (0.0, s_at.min(1.0))
    };
    if s1 - s0 < 1e-9 {
        return None;
    }
    Some(if along_u {
        Rect3 {
            origin: rect.origin + rect.edge_u * s0,
            edge_u: rect.edge_u * (s1 - s0),
            edge_v: rect.edge_v,
        }
    } else {
        Rect3 {
            origin: rect.origin + rect.edge_v * s0,
            edge_u: rect.edge_u,
            edge_v: rect.edge_v * (s1 - s0),
        }
    })
}

/// `prim(x) = ∫ ln sqrt(x² + h²) dx`, the inner antiderivative of the
/// contour kernel.
fn ln_primitive(x: f64, h: f64) -> f64 {
    if h > 1e-12 {
        x * (0.5 * libm::log(x * x + h * h) - 1.0) + h * libm::atan(x / h)
    } else if x.abs() > 1e-300 {
        x * (libm::log(x.abs()) - 1.0)
    } else {
        0.0
    }
}

/// `∫_0^L ln |p - (q0 + t q_dir)| dt` in closed form.
fn ln_segment_integral(p: Vec3, q0: Vec3, q_dir: Vec3, len: f64) -> f64 {
    let w = p - q0;
    let a = w.dot(q_dir);
    let h = libm::sqrt((w.norm2() - a * a).max(0.0));
    ln_primitive(len - a, h) - ln_primitive(-a, h)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive_simpson(f, a, fa, m, fm, flm, left, 0.5 * eps, depth - 1)
            + adaptive_simpson(f, m, fm, b, fb, frm, right, 0.5 * eps, depth - 1)
    }
}

/// `∫_0^La ∫_0^Lb ln r dt ds` between two segments; the inner integral is
/// analytic, the outer adaptive (the integrand has at worst integrable
/// logarithmic endpoint behavior when segments touch).
fn ln_double_integral(p0: Vec3, p_dir: Vec3, la: f64, q0: Vec3, q_dir: Vec3, lb: f64) -> f64 {
    let g = |s: f64| ln_segment_integral(p0 + p_dir * s, q0, q_dir, lb);
    let fa = g(0.0);
    let fb = g(la);
    let fm = g(0.5 * la);
    let whole = la / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&g, 0.0, fa, la, fb, fm, whole, 1e-7 * la * lb.max(1.0), 40)
}

/// Exact unoccluded exchange area `A_i F_ij` between two rects via the
/// contour (Stokes) form `(1/2π) ∮∮ ln r dl_i · dl_j`.
fn contour_exchange(a: &Rect3, b: &Rect3) -> f64 {
    let edges = |r: &Rect3| {
        [
            (r.origin, r.edge_u),
            (r.origin + r.edge_u, r.edge_v),
            (r.origin + r.edge_u + r.edge_v, -r.edge_u),
            (r.origin + r.edge_v, -r.edge_v),
        ]
    };
    let mut total = 0.0;
    for (pa, da) in edges(a) {
        let la = da.norm();
        if la < 1e-12 {
            continue;
        }
        let ua = da * (1.0 / la);
        for (pb, db) in edges(b) {
            let lb = db.norm();
            if lb < 1e-12 {
                continue;
            }
            let ub = db * (1.0 / lb);
            let dot = ua.dot(ub);
            if dot.abs() < 1e-12 {
                continue;
            }
            total += dot * ln_double_integral(pa, ua, la, pb, ub, lb);
        }
    }
    (total / (2.0 * core::f64::consts::PI)).max(0.0)
}

/// Exchange area `A_i F_ij` between two facets. The facets are first
/// clipped to each other's front half-space; an unoccluded (or fully
/// blocked) pair is then resolved exactly by [`contour_exchange`], while
/// partially occluded pairs fall back to adaptive double-area quadrature
/// with per-leaf shadow rays.
fn exchange_area(
    facets: &[Facet],
    grid: &AccelGrid,
    i: usize,
    j: usize,
    opts: &ViewFactorOptions,
) -> f64 {
    let fi = &facets[i];
    let fj = &facets[j];
    let Some(rect_i) = clip_rect_halfspace(&fi.rect, fj.rect.origin, fj.normal) else {
        return 0.0;
    };
    let Some(rect_j) = clip_rect_halfspace(&fj.rect, fi.rect.origin, fi.normal) else {
        return 0.0;
    };
    let area_i = rect_i.area();
    let area_j = rect_j.area();

    // negligible-contribution bound: skip the visibility rays entirely
    let dist2 = (rect_j.center() - rect_i.center()).norm2();
    let radius = |r: &Rect3| 0.5 * libm::sqrt(r.edge_u.norm2() + r.edge_v.norm2());
    let gap = libm::sqrt(dist2) - radius(&rect_i) - radius(&rect_j);
    if gap > 0.0 {
        let bound = area_i * area_j / (core::f64::consts::PI * gap * gap);
        if bound < 1e-8 * fi.area.min(fj.area) {
            return contour_exchange(&rect_i, &rect_j);
        }
    }

    // classify visibility with a grid of sample rays
    let offsets = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    let mut open = 0usize;
    let mut rays = 0usize;
    for (ia, &sa) in offsets.iter().enumerate() {
        for (ja, &ta) in offsets.iter().enumerate() {
            let p = rect_i.point(sa, ta);
            // pair with the mirrored sample so rays crisscross the gap
            let q = rect_j.point(offsets[2 - ia], offsets[2 - ja]);
            rays += 1;
            if !grid.occluded(facets, p, q, i, j) {
                open += 1;
            }
        }
    }
    if open == rays {
        return contour_exchange(&rect_i, &rect_j);
    }
    if open == 0 {
        return 0.0;
    }

    let mut total = 0.0;
    let mut leaves = 0usize;
    let mut stack: Vec<(Patch, Patch)> = alloc::vec![(
        Patch {
            rect: rect_i,
            area: area_i,
        },
        Patch {
            rect: rect_j,
            area: area_j,
        },
    )];
    while let Some((pa, pb)) = stack.pop() {
        let ca = pa.rect.center();
        let cb = pb.rect.center();
        let dvec = cb - ca;
        let r2 = dvec.norm2();
        let bigger = pa.area.max(pb.area);
        if bigger > opts.tau * r2 && leaves + stack.len() < opts.max_leaves {
            if pa.area >= pb.area {
                let (a1, a2) = pa.split();
                stack.push((a1, pb));
                stack.push((a2, pb));
            } else {
                let (b1, b2) = pb.split();
                stack.push((pa, b1));
                stack.push((pa, b2));
            }
            continue;
        }
        leaves += 1;
        if r2 < 1e-12 {
            continue;
        }
        let inv_r = 1.0 / libm::sqrt(r2);
        let cos_a = fi.normal.dot(dvec) * inv_r;
        let cos_b = -fj.normal.dot(dvec) * inv_r;
        if cos_a <= 0.0 || cos_b <= 0.0 {
            continue;
        }
        if grid.occluded(facets, ca, cb, i, j) {
            continue;
        }
        total += cos_a * cos_b / (core::f64::consts::PI * r2) * pa.area * pb.area;
    }
    total
}

/// Computes the full view-factor matrix. Reciprocity `A_i F_ij = A_j F_ji`
/// holds exactly by construction (each unordered pair is integrated once);
/// the sky view factor is the row residual, clamped at zero.
pub fn view_factors(facets: &[Facet]) -> ViewFactorMatrix {
    view_factors_with(facets, &ViewFactorOptions::default())
}

pub fn view_factors_with(facets: &[Facet], opts: &ViewFactorOptions) -> ViewFactorMatrix {
    let n = facets.len();
    let grid = AccelGrid::build(facets);
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s = exchange_area(facets, &grid, i, j, opts);
            if s > 0.0 {
                f[i * n + j] = s / facets[i].area;
                f[j * n + i] = s / facets[j].area;
            }
        }
    }
    let f_sky = (0..n)
        .map(|i| {
            let row_sum: f64 = f[i * n..(i + 1) * n].iter().sum();
            (1.0 - row_sum).max(0.0)
        })
        .collect();
    ViewFactorMatrix { n, f, f_sky }
}

// ---------------------------------------------------------------------------
// shortwave

/// Per-facet fraction of the solar disc visible (0 = fully shadowed),
/// sampled at the centroid and four interior offsets.
pub fn shadow_fractions(facets: &[Facet], grid: &AccelGrid, sun_dir: Vec3) -> Vec<f64> {
    let reach = 4.0e3; // longer than any scene diagonal here
    let samples = [
        (0.5, 0.5),
        (0.25, 0.25),
        (0.75, 0.25),
        (0.25, 0.75),
        (0.75, 0.75),
    ];
    facets
        .iter()
        .enumerate()
        .map(|(i, fct)| {
            if fct.normal.dot(sun_dir) <= 0.0 || sun_dir.z <= 0.0 {
                return 0.0;
            }
            let mut open = 0usize;
            for (a, b) in samples {
                let p = fct.rect.point(a, b);
                let q = p + sun_dir * reach;
                if !grid.occluded(facets, p, q, i, usize::MAX) {
                    open += 1;
                }
            }
            open as f64 / samples.len() as f64
        })
        .collect()
}

/// Absorbed shortwave per facet [W/m2]: direct with shading, isotropic
/// diffuse sky, and inter-reflections through the radiosity system solved
/// by fixed-point iteration.
pub fn shortwave(facets: &[Facet], vf: &ViewFactorMatrix, sky: &SkyModel) -> Result<Vec<f64>> {
    let grid = AccelGrid::build(facets);
    shortwave_with_grid(facets, vf, sky, &grid)
}

pub fn shortwave_with_grid(
    facets: &[Facet],
    vf: &ViewFactorMatrix,
    sky: &SkyModel,
    grid: &AccelGrid,
) -> Result<Vec<f64>> {
    let n = facets.len();
    if vf.len() != n {
        return Err(ModelError::DimensionMismatch(
            "view factors do not match facet list".into(),
        ));
    }
    let shadow = if sky.dni > 0.0 && sky.sun_dir.z > 0.0 {
        shadow_fractions(facets, grid, sky.sun_dir)
    } else {
        vec![0.0; n]
    };
    let mut emitted: Vec<f64> = Vec::with_capacity(n);
    for (i, f) in facets.iter().enumerate() {
        if f.albedo >= 1.0 {
            return Err(ModelError::Numerical("albedo >= 1 cannot converge".into()));
        }
        let direct = sky.dni * f.normal.dot(sky.sun_dir).max(0.0) * shadow[i];
        emitted.push(direct + sky.dhi * vf.f_sky[i]);
    }
    // radiosity fixed point: B = albedo (E + F B)
    let mut b = vec![0.0; n];
    let mut b_next = vec![0.0; n];
    let scale = emitted.iter().cloned().fold(1.0, f64::max);
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let reflected: f64 = vf
                .row(i)
                .iter()
                .zip(&b)
                .map(|(fij, bj)| fij * bj)
                .sum();
            b_next[i] = facets[i].albedo * (emitted[i] + reflected);
            delta = delta.max((b_next[i] - b[i]).abs());
        }
        core::mem::swap(&mut b, &mut b_next);
        if delta <= 1e-6 * scale {
            let mut absorbed = vec![0.0; n];
            for i in 0..n {
                let incident: f64 = emitted[i]
                    + vf.row(i).iter().zip(&b).map(|(fij, bj)| fij * bj).sum::<f64>();
                absorbed[i] = (1.0 - facets[i].albedo) * incident;
            }
            return Ok(absorbed);
        }
    }
    Err(ModelError::Numerical(
        "shortwave radiosity did not converge".into(),
    ))
}

// ---------------------------------------------------------------------------
// longwave

/// Net longwave per facet [W/m2]: single-bounce linear exchange with the
/// sky and all visible facets. `temps` holds one surface temperature per
/// facet.
pub fn longwave(
    facets: &[Facet],
    vf: &ViewFactorMatrix,
    temps: &[f64],
    sky: &SkyModel,
) -> Result<Vec<f64>> {
    let n = facets.len();
    if vf.len() != n || temps.len() != n {
        return Err(ModelError::DimensionMismatch(
            "longwave inputs do not match facet list".into(),
        ));
    }
    let pow4 = |t: f64| t * t * t * t;
    let sky4 = pow4(sky.t_sky);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let t4 = pow4(temps[i]);
        let mut net = vf.f_sky[i] * (sky4 - t4);
        for (j, fij) in vf.row(i).iter().enumerate() {
            if *fij > 0.0 {
                net += fij * (pow4(temps[j]) - t4);
            }
        }
        out[i] = facets[i].emissivity * STEFAN_BOLTZMANN * net;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// aggregation

/// Per-zone and per-layer totals of one radiation solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationAggregate {
    /// Net radiative flux per zone as `[wall, roof]` [W] (shortwave +
    /// longwave over the zone's wall and roof facets respectively).
    pub zone_phi: BTreeMap<ZoneRef, [f64; 2]>,
    /// Absorbed shortwave of studied-cell zones per layer [W].
    pub layer_sw: Vec<f64>,
}

/// Sums per-facet fluxes to per-zone net radiation and per-layer studied
/// shortwave. `studied` is indexed by building, `n_layers` sizes the layer
/// totals.
pub fn aggregate_zone_flux(
    facets: &[Facet],
    sw: &[f64],
    lw: &[f64],
    studied: &[bool],
    n_layers: usize,
) -> Result<RadiationAggregate> {
    let n = facets.len();
    if sw.len() != n || lw.len() != n {
        return Err(ModelError::DimensionMismatch(
            "flux vectors do not match facet list".into(),
        ));
    }
    let mut zone_phi = BTreeMap::new();
    let mut layer_sw = vec![0.0; n_layers];
    for (i, f) in facets.iter().enumerate() {
        let Some(owner) = f.owner else { continue };
        let slot = if f.kind == FacetKind::Roof { 1 } else { 0 };
        zone_phi.entry(owner).or_insert([0.0; 2])[slot] += (sw[i] + lw[i]) * f.area;
        if studied.get(owner.building).copied().unwrap_or(false) && f.layer < n_layers {
            layer_sw[f.layer] += sw[i] * f.area;
        }
    }
    Ok(RadiationAggregate { zone_phi, layer_sw })
}

// BTreeMap keys need Ord
impl PartialOrd for ZoneRef {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ZoneRef {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.building, self.storey).cmp(&(other.building, other.storey))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect2;

    fn square(origin: Vec3, u: Vec3, v: Vec3) -> Facet {
        let rect = Rect3 {
            origin,
            edge_u: u,
            edge_v: v,
        };
        Facet {
            normal: rect.normal(),
            area: rect.area(),
            rect,
            kind: FacetKind::Wall,
            owner: None,
            layer: 0,
            albedo: 0.2,
            emissivity: 0.9,
        }
    }

    #[test]
    fn sun_equator_equinox_noon() {
        // Mar 21 (doy 80), solar noon at lon 0
        let t = Instant::from_civil(2015, 3, 21, 12, 0, 0);
        let s = sun_position(t, 0.0, 0.0);
        assert!(s.altitude_deg > 89.5 - 1.0, "altitude {}", s.altitude_deg);
    }

    #[test]
    fn sun_basel_winter_noon() {
        // solar noon at Basel's longitude: 12:00 - 7.59/15 h UTC
        let t = Instant::from_civil(2015, 1, 3, 11, 30, 0).add_seconds(-96);
        let s = sun_position(t, 47.56, 7.59);
        assert!((s.altitude_deg - 19.5).abs() < 1.0, "altitude {}", s.altitude_deg);
        // due south
        assert!((s.azimuth_deg.abs() - 180.0).abs() < 4.0, "azimuth {}", s.azimuth_deg);
    }

    #[test]
    fn sun_below_horizon_at_night() {
        let t = Instant::from_civil(2015, 1, 3, 0, 0, 0);
        let s = sun_position(t, 47.0, 0.0);
        assert!(s.altitude_deg < 0.0);
    }

    #[test]
    fn parallel_unit_squares() {
        let a = square(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let mut b = square(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        b.normal = Vec3::new(0.0, 0.0, -1.0);
        let vf = view_factors(&[a, b]);
        assert!((vf.get(0, 1) - 0.19983).abs() < 0.002, "F = {}", vf.get(0, 1));
        // the contour integration is near-exact for this configuration
        assert!((vf.get(0, 1) - 0.1998250).abs() < 1e-4);
        assert!((vf.get(0, 1) - vf.get(1, 0)).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_unit_squares_common_edge() {
        let a = square(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        // vertical square standing on the shared edge y = 0
        let b = square(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        // normal should face +y (toward a's interior side)
        assert!(b.normal.y > 0.9);
        let vf = view_factors(&[a, b]);
        assert!((vf.get(0, 1) - 0.20004).abs() < 0.002, "F = {}", vf.get(0, 1));
        assert!((vf.get(0, 1) - 0.2000440).abs() < 1e-4);
    }

    #[test]
    fn isolated_roof_sees_only_sky() {
        let props = SurfaceProps::default();
        let f = Facet::horizontal(
            Rect2 {
                x0: 0.0,
                y0: 0.0,
                x1: 5.0,
                y1: 5.0,
            },
            10.0,
            FacetKind::Roof,
            None,
            0,
            &props,
        );
        let vf = view_factors(&[f]);
        assert_eq!(vf.f_sky[0], 1.0);
    }

    #[test]
    fn closed_box_rows_near_unity() {
        // interior of a unit cube: six inward-facing squares
        let e = 1.0;
        let faces = [
            // floor (normal +z)
            square(Vec3::new(0.0, 0.0, 0.0), Vec3::new(e, 0.0, 0.0), Vec3::new(0.0, e, 0.0)),
            // ceiling (normal -z)
            square(Vec3::new(0.0, 0.0, e), Vec3::new(0.0, e, 0.0), Vec3::new(e, 0.0, 0.0)),
            // y = 0 wall (normal +y)
            square(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 0.0, e), Vec3::new(e, 0.0, 0.0)),
            // y = e wall (normal -y)
            square(Vec3::new(0.0, e, 0.0), Vec3::new(e, 0.0, 0.0), Vec3::new(0.0, 0.0, e)),
            // x = 0 wall (normal +x)
            square(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, e, 0.0), Vec3::new(0.0, 0.0, e)),
            // x = e wall (normal -x)
            square(Vec3::new(e, 0.0, 0.0), Vec3::new(0.0, 0.0, e), Vec3::new(0.0, e, 0.0)),
        ];
        let vf = view_factors(&faces);
        for i in 0..6 {
            let row: f64 = vf.row(i).iter().sum();
            assert!((row - 1.0).abs() < 1e-4, "row {i} sums to {row}");
        }
    }

    #[test]
    fn occlusion_blocks_view() {
        let a = square(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let mut b = square(
            Vec3::new(0.0, 0.0, 2.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        );
        b.normal = Vec3::new(0.0, 0.0, -1.0);
        // large opaque screen between them
        let mut screen = square(
            Vec3::new(-2.0, -2.0, 1.0),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(0.0, 5.0, 0.0),
        );
        screen.normal = Vec3::new(0.0, 0.0, 1.0);
        let open = view_factors(&[a.clone(), b.clone()]);
        let blocked = view_factors(&[a, b, screen]);
        assert!(open.get(0, 1) > 0.05);
        assert!(blocked.get(0, 1) < 1e-9);
    }

    #[test]
    fn longwave_detailed_balance_and_roof_loss() {
        let props = SurfaceProps::default();
        let roof = Facet::horizontal(
            Rect2 {
                x0: 0.0,
                y0: 0.0,
                x1: 4.0,
                y1: 4.0,
            },
            6.0,
            FacetKind::Roof,
            None,
            0,
            &props,
        );
        let facets = [roof];
        let vf = view_factors(&facets);
        let sky = SkyModel {
            dni: 0.0,
            dhi: 0.0,
            t_sky: 263.0,
            sun_dir: Vec3::new(0.0, 0.0, -1.0),
        };
        let lw = longwave(&facets, &vf, &[283.0], &sky).unwrap();
        assert!((lw[0] + 83.1).abs() < 0.5, "net {}", lw[0]);
        // equal temperatures: zero net
        let sky_eq = SkyModel { t_sky: 283.0, ..sky };
        let lw = longwave(&facets, &vf, &[283.0], &sky_eq).unwrap();
        assert!(lw[0].abs() < 1e-9);
    }

    #[test]
    fn unobstructed_horizontal_direct() {
        let props = SurfaceProps {
            albedo: 0.0,
            emissivity: 0.9,
        };
        let f = Facet::horizontal(
            Rect2 {
                x0: 0.0,
                y0: 0.0,
                x1: 10.0,
                y1: 10.0,
            },
            0.0,
            FacetKind::Ground,
            None,
            0,
            &props,
        );
        let facets = [f];
        let vf = view_factors(&facets);
        let beta: f64 = 0.4; // rad
        let sky = SkyModel {
            dni: 800.0,
            dhi: 0.0,
            t_sky: 270.0,
            sun_dir: Vec3::new(libm::cos(beta), 0.0, libm::sin(beta)),
        };
        let sw = shortwave(&facets, &vf, &sky).unwrap();
        assert!((sw[0] - 800.0 * libm::sin(beta)).abs() < 1e-9);
    }

    #[test]
    fn two_facing_walls_single_bounce() {
        // sunlit wall reflects onto a dark facing wall
        let lit = square(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
        ); // normal +y
        assert!(lit.normal.y > 0.9);
        let dark = square(
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ); // normal -y
        assert!(dark.normal.y < -0.9);
        let facets = [lit, dark];
        let vf = view_factors(&facets);
        let sky = SkyModel {
            dni: 1000.0,
            dhi: 0.0,
            t_sky: 270.0,
            // grazing sun hitting only the +y wall
            sun_dir: Vec3::new(0.0, 0.2, 0.9798).normalized(),
        };
        let sw = shortwave(&facets, &vf, &sky).unwrap();
        let incident_lit = 1000.0 * facets[0].normal.dot(sky.sun_dir);
        // dominant single-bounce estimate on the dark wall
        let est = (1.0 - 0.2) * 0.2 * incident_lit * vf.get(0, 1) * facets[0].area
            / facets[1].area;
        assert!(sw[1] > 0.0);
        assert!((sw[1] - est).abs() / est < 0.25, "sw {} est {est}", sw[1]);
    }

    #[test]
    fn aggregate_simple() {
        let props = SurfaceProps::default();
        let zone = ZoneRef {
            building: 0,
            storey: 0,
        };
        let f = Facet::wall(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(20.0, 0.0, 0.0),
            3.0,
            zone,
            &props,
        );
        let agg = aggregate_zone_flux(&[f], &[10.0], &[0.0], &[true], 1).unwrap();
        assert!((agg.zone_phi[&zone][0] - 600.0).abs() < 1e-9);
        assert!(agg.zone_phi[&zone][1] == 0.0);
        assert!((agg.layer_sw[0] - 600.0).abs() < 1e-9);
    }
}
