//! Discrete-layer canopy air column: one well-mixed potential-temperature
//! node per storey height, conservative vertical turbulent diffusion with
//! roof-line porosity, building heat sources, and a prescribed
//! linear-exponential eddy-diffusivity profile.

use alloc::vec;
use alloc::vec::Vec;

use crate::constants::AIR_VOLUMETRIC_HEAT;
use crate::error::{ModelError, Result};
use crate::morphology::{layer_stats, Scene};

/// Power-exponential eddy diffusivity profile,
/// `K(z) = K_max (z/h)^p exp(p (1 - (z/h)^2) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusivityProfile {
    /// Maximum eddy diffusivity [m2/s].
    pub k_max: f64,
    /// Height of the maximum [m].
    pub h_max: f64,
    /// Shape exponent `p` >= 1. Larger values suppress mixing deep in the
    /// canopy (sheltered street canyons) while leaving the maximum intact.
    pub shape: f64,
}

impl Default for DiffusivityProfile {
    fn default() -> Self {
        DiffusivityProfile {
            k_max: 2.0,
            h_max: 60.0,
            shape: 2.0,
        }
    }
}

/// Eddy diffusivity at height `z` [m2/s]. The maximum is exactly `k_max`,
/// attained at `z = h_max` for any shape exponent.
pub fn eddy_diffusivity(z: f64, profile: &DiffusivityProfile) -> Result<f64> {
    if z < 0.0 {
        return Err(ModelError::invalid_argument("height must be nonnegative"));
    }
    let s = z / profile.h_max;
    let p = profile.shape;
    // the s^p exp(-p s^2 / 2) family peaks at s = 1 for every p; this form
    // makes K(h_max) = k_max exact in floating point
    Ok(profile.k_max * libm::pow(s, p) * libm::exp(0.5 * p * (1.0 - s * s)))
}

/// Plan-area profile of the air column: free canopy area per layer and roof
/// area per interface.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnGeometry {
    /// Free canopy plan area per layer [m2]; full tile area above the
    /// canopy line.
    pub s_c: Vec<f64>,
    /// Roof area at each interface `k` (between layers `k` and `k+1`) [m2].
    pub s_r: Vec<f64>,
    /// Layer height [m].
    pub layer_height: f64,
}

impl ColumnGeometry {
    /// Builds the column for a scene, extended with full-plan layers up to
    /// `forcing_height`.
    pub fn from_scene(scene: &Scene, forcing_height: f64) -> Result<ColumnGeometry> {
        let dz = scene.storey_height;
        let n_total = libm::round(forcing_height / dz) as usize;
        let n_canopy = scene.n_layers();
        if n_total < n_canopy + 2 {
            return Err(ModelError::invalid_argument(
                "forcing height must leave at least two layers above the canopy",
            ));
        }
        let mut s_c = Vec::with_capacity(n_total);
        let mut s_r = vec![0.0; n_total - 1];
        for k in 0..n_total {
            if k < n_canopy {
                let st = layer_stats(scene, k)?;
                s_c.push(st.s_c);
                s_r[k] = st.s_r;
            } else {
                s_c.push(scene.tile_area());
            }
        }
        Ok(ColumnGeometry {
            s_c,
            s_r,
            layer_height: dz,
        })
    }

    pub fn n_total(&self) -> usize {
        self.s_c.len()
    }

    /// Open flow area of interface `k`, reduced by the roof porosity factor.
    pub fn interface_area(&self, k: usize) -> f64 {
        (self.s_c[k + 1] * (1.0 - self.s_r[k] / self.s_c[k + 1])).max(0.0)
    }

    /// Heat capacity of layer `k` [J/K].
    pub fn layer_capacity(&self, k: usize) -> f64 {
        AIR_VOLUMETRIC_HEAT * self.s_c[k] * self.layer_height
    }
}

/// Potential temperature per layer, ground to forcing height.
#[derive(Debug, Clone, PartialEq)]
pub struct CanopyState {
    pub theta: Vec<f64>,
    /// Layers below the roof line.
    pub n_canopy: usize,
}

impl CanopyState {
    pub fn uniform(t: f64, n_total: usize, n_canopy: usize) -> Self {
        CanopyState {
            theta: vec![t; n_total],
            n_canopy,
        }
    }
}

/// Heat sources per layer, in W. `roof[k]` is the roof heat released INTO
/// layer `k` (from roofs at its bottom interface). `radiative[k]` is the
/// convective release of net surface radiation not taken up by the
/// buildings (sun-warmed or sky-cooled surfaces exchanging with the street
/// air).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerForcing {
    pub wall: Vec<f64>,
    pub roof: Vec<f64>,
    pub vent: Vec<f64>,
    pub radiative: Vec<f64>,
}

impl LayerForcing {
    pub fn zero(n: usize) -> Self {
        LayerForcing {
            wall: vec![0.0; n],
            roof: vec![0.0; n],
            vent: vec![0.0; n],
            radiative: vec![0.0; n],
        }
    }

    pub fn total(&self, k: usize) -> f64 {
        self.wall[k] + self.roof[k] + self.vent[k] + self.radiative[k]
    }
}

/// Per-step diagnostics of [`canopy_step`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CanopyStepDiag {
    /// Heat conducted from the pinned top layer into the column over the
    /// step [J]; positive warms the column.
    pub top_boundary_heat: f64,
    /// Source heat injected over the step [J].
    pub source_heat: f64,
}

fn check_dims(state: &CanopyState, geom: &ColumnGeometry, forcing: &LayerForcing) -> Result<usize> {
    let n = geom.n_total();
    if state.theta.len() != n
        || forcing.wall.len() != n
        || forcing.roof.len() != n
        || forcing.vent.len() != n
        || forcing.radiative.len() != n
    {
        return Err(ModelError::DimensionMismatch(
            "canopy state/geometry/forcing lengths differ".into(),
        ));
    }
    Ok(n)
}

/// Interface conductances g_k [W/K] between layers k and k+1.
fn interface_conductances(geom: &ColumnGeometry, profile: &DiffusivityProfile) -> Vec<f64> {
    let dz = geom.layer_height;
    (0..geom.n_total() - 1)
        .map(|k| {
            let z = (k + 1) as f64 * dz;
            let kh = eddy_diffusivity(z, profile).unwrap_or(0.0);
            AIR_VOLUMETRIC_HEAT * geom.interface_area(k) * kh / dz
        })
        .collect()
}

/// Instantaneous tendency d(theta)/dt [K/s] per layer: conservative
/// diffusion across porosity-reduced interfaces plus wall, roof and venting
/// sources. Boundaries are treated as zero-flux here; the Dirichlet top
/// forcing is applied by [`canopy_step`].
pub fn layer_tendency(
    state: &CanopyState,
    geom: &ColumnGeometry,
    forcing: &LayerForcing,
    profile: &DiffusivityProfile,
) -> Result<Vec<f64>> {
    let n = check_dims(state, geom, forcing)?;
    let g = interface_conductances(geom, profile);
    let mut out = vec![0.0; n];
    for k in 0..n {
        let mut heat = forcing.total(k);
        if k + 1 < n {
            heat += g[k] * (state.theta[k + 1] - state.theta[k]);
        }
        if k > 0 {
            heat -= g[k - 1] * (state.theta[k] - state.theta[k - 1]);
        }
        out[k] = heat / geom.layer_capacity(k);
    }
    Ok(out)
}

/// Advances the column one step: backward Euler on the diffusion operator
/// (tridiagonal solve), explicit sources. `t_top` pins the top layer to the
/// forcing temperature; `None` leaves the top boundary at zero flux (used
/// by conservation tests).
pub fn canopy_step(
    state: &CanopyState,
    geom: &ColumnGeometry,
    forcing: &LayerForcing,
    profile: &DiffusivityProfile,
    t_top: Option<f64>,
    dt: f64,
) -> Result<(CanopyState, CanopyStepDiag)> {
    if !(dt > 0.0) {
        return Err(ModelError::invalid_argument("dt must be positive"));
    }
    let n = check_dims(state, geom, forcing)?;
    let g = interface_conductances(geom, profile);

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut source_heat = 0.0;
    for k in 0..n {
        let c = geom.layer_capacity(k);
        diag[k] = c / dt;
        rhs[k] = c / dt * state.theta[k] + forcing.total(k);
        source_heat += forcing.total(k) * dt;
        if k + 1 < n {
            diag[k] += g[k];
            upper[k] = -g[k];
        }
        if k > 0 {
            diag[k] += g[k - 1];
            lower[k] = -g[k - 1];
        }
    }
    if let Some(t) = t_top {
        // Dirichlet top: replace the last row
        source_heat -= forcing.total(n - 1) * dt;
        lower[n - 1] = 0.0;
        diag[n - 1] = 1.0;
        rhs[n - 1] = t;
    }

    let theta = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    let top_boundary_heat = if t_top.is_some() {
        g[n - 2] * (theta[n - 1] - theta[n - 2]) * dt
    } else {
        0.0
    };
    Ok((
        CanopyState {
            theta,
            n_canopy: state.n_canopy,
        },
        CanopyStepDiag {
            top_boundary_heat,
            source_heat,
        },
    ))
}

/// Thomas algorithm for a tridiagonal system.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if libm::fabs(diag[0]) < 1e-300 {
        return Err(ModelError::Numerical("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        if libm::fabs(denom) < 1e-300 {
            return Err(ModelError::Numerical("singular tridiagonal system".into()));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_geom(n: usize, area: f64) -> ColumnGeometry {
        ColumnGeometry {
            s_c: vec![area; n],
            s_r: vec![0.0; n - 1],
            layer_height: 3.0,
        }
    }

    #[test]
    fn diffusivity_endpoints() {
        let p = DiffusivityProfile::default();
        assert_eq!(eddy_diffusivity(0.0, &p).unwrap(), 0.0);
        // analytic maximum, exact
        assert_eq!(eddy_diffusivity(60.0, &p).unwrap(), 2.0);
        // 2 (1/2)^p e^{p 3/8} with p = 2
        let mid = eddy_diffusivity(30.0, &p).unwrap();
        assert!((mid - 0.5 * libm::exp(0.75)).abs() < 1e-12, "K(30) = {mid}");
        assert!(eddy_diffusivity(-1.0, &p).is_err());
    }

    #[test]
    fn diffusivity_unimodal_nonnegative() {
        let p = DiffusivityProfile::default();
        let mut rising = true;
        let mut prev = 0.0;
        for i in 1..400 {
            let k = eddy_diffusivity(i as f64, &p).unwrap();
            assert!(k >= 0.0);
            if rising && k < prev {
                rising = false;
            } else if !rising {
                assert!(k <= prev + 1e-12);
            }
            prev = k;
        }
        assert!(eddy_diffusivity(1.0e4, &p).unwrap() < 1e-12);
    }

    #[test]
    fn uniform_state_zero_tendency() {
        let geom = uniform_geom(20, 16_000.0);
        let state = CanopyState::uniform(280.0, 20, 10);
        let forcing = LayerForcing::zero(20);
        let t = layer_tendency(&state, &geom, &forcing, &DiffusivityProfile::default()).unwrap();
        for v in t {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn porosity_halves_interface_exchange() {
        let p = DiffusivityProfile::default();
        let mut geom = uniform_geom(2, 1000.0);
        let state = CanopyState {
            theta: vec![280.0, 281.0],
            n_canopy: 2,
        };
        let forcing = LayerForcing::zero(2);
        let base = layer_tendency(&state, &geom, &forcing, &p).unwrap();
        geom.s_r[0] = 500.0; // S_r = S_c/2 at the interface
        let poro = layer_tendency(&state, &geom, &forcing, &p).unwrap();
        assert!((poro[0] - 0.5 * base[0]).abs() < 1e-15);
        assert!((poro[1] - 0.5 * base[1]).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_step() {
        let geom = uniform_geom(20, 16_000.0);
        let state = CanopyState::uniform(275.0, 20, 10);
        let forcing = LayerForcing::zero(20);
        let (next, diag) = canopy_step(
            &state,
            &geom,
            &forcing,
            &DiffusivityProfile::default(),
            Some(275.0),
            60.0,
        )
        .unwrap();
        for (a, b) in next.theta.iter().zip(&state.theta) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(diag.top_boundary_heat.abs() < 1e-6);
    }

    #[test]
    fn conservation_with_closed_boundaries() {
        let geom = uniform_geom(20, 16_000.0);
        let mut state = CanopyState::uniform(275.0, 20, 10);
        for (i, t) in state.theta.iter_mut().enumerate() {
            *t += (i as f64 * 0.7).sin();
        }
        let forcing = LayerForcing::zero(20);
        let weighted = |s: &CanopyState| -> f64 {
            s.theta.iter().zip(&geom.s_c).map(|(t, a)| t * a).sum()
        };
        let before = weighted(&state);
        for _ in 0..50 {
            let (next, _) = canopy_step(
                &state,
                &geom,
                &forcing,
                &DiffusivityProfile::default(),
                None,
                60.0,
            )
            .unwrap();
            state = next;
        }
        let after = weighted(&state);
        assert!(
            ((after - before) / before).abs() < 1e-10,
            "drift {}",
            (after - before) / before
        );
    }

    #[test]
    fn maximum_principle() {
        let geom = uniform_geom(20, 16_000.0);
        let mut state = CanopyState::uniform(275.0, 20, 10);
        for (i, t) in state.theta.iter_mut().enumerate() {
            *t += 3.0 * (i as f64 * 1.3).cos();
        }
        let t_top = 270.0;
        let lo = state.theta.iter().cloned().fold(t_top, f64::min);
        let hi = state.theta.iter().cloned().fold(t_top, f64::max);
        let forcing = LayerForcing::zero(20);
        let (next, _) = canopy_step(
            &state,
            &geom,
            &forcing,
            &DiffusivityProfile::default(),
            Some(t_top),
            600.0,
        )
        .unwrap();
        for t in &next.theta {
            assert!(*t >= lo - 1e-9 && *t <= hi + 1e-9);
        }
    }

    #[test]
    fn heated_layer_steady_profile_decreases_with_height() {
        // constant wall source in layer 1, cold pinned top: theta decreases
        // with height at steady state
        let geom = uniform_geom(10, 10_000.0);
        let mut forcing = LayerForcing::zero(10);
        forcing.wall[1] = 50_000.0;
        forcing.wall[0] = 50_000.0;
        let mut state = CanopyState::uniform(270.0, 10, 5);
        let p = DiffusivityProfile::default();
        for _ in 0..5000 {
            let (next, _) = canopy_step(&state, &geom, &forcing, &p, Some(270.0), 60.0).unwrap();
            state = next;
        }
        for k in 1..10 {
            assert!(
                state.theta[k] <= state.theta[k - 1] + 1e-9,
                "profile not monotone at {k}"
            );
        }
        assert!(state.theta[0] > 270.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let geom = uniform_geom(20, 16_000.0);
        let state = CanopyState::uniform(275.0, 19, 10);
        let forcing = LayerForcing::zero(20);
        assert!(matches!(
            layer_tendency(&state, &geom, &forcing, &DiffusivityProfile::default()),
            Err(ModelError::DimensionMismatch(_))
        ));
    }
}
