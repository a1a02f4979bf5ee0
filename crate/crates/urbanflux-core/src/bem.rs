//! Two-node RC building energy model: one thermal-mass node and one indoor
//! air node per storey of each building, with a constant-linear climate
//! control, a radiative split onto the two nodes, and the surface fluxes
//! returned to the canopy.

use crate::error::{ModelError, Result};

/// Constant-linear climate control: full heating below `t_target - 2 K`,
/// full cooling above `t_target + 2 K`, linear ramp in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    /// Maximum cooling power (algebraic, <= 0) [W m^-2 floor].
    pub q_min: f64,
    /// Maximum heating power [W m^-2 floor].
    pub q_max: f64,
    /// Target indoor temperature [K].
    pub t_target: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            q_min: -100.0,
            q_max: 100.0,
            t_target: 292.15,
        }
    }
}

/// Per-unit-area zone parameters, as configured in the scene file. Area
/// bases: `k_ext` per wall area, `k_r` per roof area, `k_int` per
/// (wall + roof) area, `k_vent`, capacities, powers and loads per floor
/// area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneParamSet {
    pub k_ext: f64,
    pub k_int: f64,
    pub k_vent: f64,
    pub k_r: f64,
    pub c_w: f64,
    pub c_a: f64,
    /// Opening coefficient: fraction of envelope net radiation delivered
    /// directly to the indoor air.
    pub eta: f64,
    /// External surface convection coefficient [W K^-1 m^-2].
    pub h_conv: f64,
    /// Internal loads [W m^-2 floor].
    pub q_internal: f64,
    pub control: ControlParams,
}

impl Default for ZoneParamSet {
    fn default() -> Self {
        ZoneParamSet {
            k_ext: 0.15,
            k_int: 0.15,
            k_vent: 0.3,
            k_r: 0.15,
            c_w: 3.0e5,
            c_a: 1.4e3,
            eta: 0.15,
            h_conv: 8.0,
            q_internal: 5.0,
            control: ControlParams::default(),
        }
    }
}

/// Zone geometry, fixed by the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneGeometry {
    pub floor_area: f64,
    /// Exterior wall area of the storey [m2].
    pub wall_area: f64,
    /// Roof area (zero for storeys below the top one) [m2].
    pub roof_area: f64,
    /// Indoor air volume [m3].
    pub volume: f64,
}

/// Full parameter block of one zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneParams {
    pub set: ZoneParamSet,
    pub geometry: ZoneGeometry,
}

impl ZoneParams {
    pub fn new(set: ZoneParamSet, geometry: ZoneGeometry) -> Self {
        ZoneParams { set, geometry }
    }

    /// Absolute conductance to outdoor air through the walls [W/K].
    pub fn cond_ext(&self) -> f64 {
        self.set.k_ext * self.geometry.wall_area
    }

    /// Absolute conductance to outdoor air through the roof [W/K].
    pub fn cond_roof(&self) -> f64 {
        self.set.k_r * self.geometry.roof_area
    }

    /// Absolute conductance between mass and indoor air [W/K].
    pub fn cond_int(&self) -> f64 {
        self.set.k_int * (self.geometry.wall_area + self.geometry.roof_area)
    }

    /// Absolute venting/infiltration conductance [W/K].
    pub fn cond_vent(&self) -> f64 {
        self.set.k_vent * self.geometry.floor_area
    }

    /// Thermal-mass capacity [J/K].
    pub fn cap_mass(&self) -> f64 {
        self.set.c_w * self.geometry.floor_area
    }

    /// Indoor air capacity [J/K].
    pub fn cap_air(&self) -> f64 {
        self.set.c_a * self.geometry.floor_area
    }

    /// Total internal loads [W].
    pub fn internal_load(&self) -> f64 {
        self.set.q_internal * self.geometry.floor_area
    }

    /// Share of net envelope radiation convected off the exterior surface
    /// into the adjacent canopy air. Complements [`split_radiative`]: a
    /// quasi-steady massless surface passes `(1 - eta) k_ext / h_conv` of
    /// the absorbed flux into the mass node and sheds the rest,
    /// `(1 - eta) (1 - k_ext / h_conv)`, to the street air.
    pub fn canopy_release_fraction(&self) -> f64 {
        ((1.0 - self.set.eta) * (1.0 - self.set.k_ext / self.set.h_conv)).clamp(0.0, 1.0)
    }

    /// Share of net roof radiation convected into the canopy air. Roofs
    /// carry no glazing, so only the conductive fraction `k_r / h_conv`
    /// enters the building; the rest is shed to the layer above.
    pub fn roof_release_fraction(&self) -> f64 {
        (1.0 - self.set.k_r / self.set.h_conv).clamp(0.0, 1.0)
    }
}

/// Net envelope radiation of a zone, split by receiving surface class [W].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvelopeRadiation {
    /// Net flux absorbed over the zone's wall facets [W].
    pub wall: f64,
    /// Net flux absorbed over the zone's roof facets [W].
    pub roof: f64,
}

impl EnvelopeRadiation {
    pub fn total(&self) -> f64 {
        self.wall + self.roof
    }
}

/// State of the two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneState {
    /// Thermal-mass temperature [K].
    pub t_mass: f64,
    /// Indoor air temperature [K].
    pub t_air: f64,
}

impl ZoneState {
    pub fn uniform(t: f64) -> Self {
        ZoneState { t_mass: t, t_air: t }
    }
}

/// Heat released to the canopy, sign positive into the canopy air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneFluxes {
    /// Wall flux [W m^-2 wall].
    pub wall: f64,
    /// Roof flux [W m^-2 roof], released one layer above the zone.
    pub roof: f64,
    /// Venting/infiltration flux [W m^-3 zone volume].
    pub vent: f64,
    /// Climatic flux in effect [W m^-2 floor].
    pub climatic: f64,
}

/// Climatic flux from the constant-linear control [W m^-2 floor].
pub fn climatic_flux(t_air: f64, params: &ZoneParams) -> f64 {
    let c = &params.set.control;
    let ramp = (c.t_target + 2.0 - t_air) / 4.0;
    c.q_min + (c.q_max - c.q_min) * ramp.clamp(0.0, 1.0)
}

/// Splits the net envelope radiative flux onto the two nodes:
/// `(to air, to mass)` in the same unit as `phi`. The opening coefficient
/// applies to the wall share only; the opaque roof passes just the
/// conductive fraction `k_r / h_conv` to the mass node.
pub fn split_radiative(phi: EnvelopeRadiation, params: &ZoneParams) -> (f64, f64) {
    let eta = params.set.eta;
    let to_air = eta * phi.wall;
    let to_mass = phi.wall * (1.0 - eta) * params.set.k_ext / params.set.h_conv
        + phi.roof * params.set.k_r / params.set.h_conv;
    (to_air, to_mass)
}

/// Node tendencies `(dT_mass/dt, dT_air/dt)` [K/s] for canopy temperatures
/// of the zone's layer (`theta_k`) and of the layer above (`theta_k1`, used
/// by the roof term) and net envelope radiation `phi` [W].
pub fn zone_tendency(
    state: &ZoneState,
    theta_k: f64,
    theta_k1: f64,
    phi: EnvelopeRadiation,
    params: &ZoneParams,
) -> (f64, f64) {
    let (phi_air, phi_mass) = split_radiative(phi, params);
    let q_c = climatic_flux(state.t_air, params) * params.geometry.floor_area;
    let d_mass = (params.cond_int() * (state.t_air - state.t_mass)
        + params.cond_ext() * (theta_k - state.t_mass)
        + params.cond_roof() * (theta_k1 - state.t_mass)
        + phi_mass)
        / params.cap_mass();
    let d_air = (params.cond_int() * (state.t_mass - state.t_air)
        + params.cond_vent() * (theta_k - state.t_air)
        + q_c
        + params.internal_load()
        + phi_air)
        / params.cap_air();
    (d_mass, d_air)
}

/// Heat released to the canopy for the given zone state and canopy
/// temperatures. Exact action-reaction with the corresponding exchange
/// terms of the node budgets.
pub fn surface_fluxes(
    state: &ZoneState,
    theta_k: f64,
    theta_k1: f64,
    params: &ZoneParams,
) -> ZoneFluxes {
    ZoneFluxes {
        wall: params.set.k_ext * (state.t_mass - theta_k),
        roof: params.set.k_r * (state.t_mass - theta_k1),
        vent: params.cond_vent() * (state.t_air - theta_k) / params.geometry.volume,
        climatic: climatic_flux(state.t_air, params),
    }
}

/// Advances the zone one step with backward Euler on the two-node system.
/// The piecewise-linear climatic control is treated implicitly: the step is
/// solved within each control regime (full heating, linear ramp, full
/// cooling) and the regime consistent with its own end-of-step air
/// temperature is kept. With the ramp slope reaching 50 W m^-2 K^-1, an
/// explicit control would be an unstable map at minute-scale steps and the
/// thermostat would chatter.
pub fn zone_step(
    state: &ZoneState,
    theta_k: f64,
    theta_k1: f64,
    phi: EnvelopeRadiation,
    params: &ZoneParams,
    dt: f64,
) -> Result<ZoneState> {
    if !(dt > 0.0) {
        return Err(ModelError::invalid_argument("dt must be positive"));
    }
    let (phi_air, phi_mass) = split_radiative(phi, params);
    let k_int = params.cond_int();
    let k_ext = params.cond_ext();
    let k_r = params.cond_roof();
    let k_vent = params.cond_vent();
    let c_w = params.cap_mass();
    let c_a = params.cap_air();
    let ctl = &params.set.control;
    let area = params.geometry.floor_area;

    // q_c = q_lin - slope_lin * T_air' within a regime
    let solve = |q_lin: f64, slope_lin: f64| -> Result<ZoneState> {
        // (I - dt A) x' = x + dt b, A the coupling matrix, b the constants
        let a11 = -(k_int + k_ext + k_r) / c_w;
        let a12 = k_int / c_w;
        let a21 = k_int / c_a;
        let a22 = -(k_int + k_vent + slope_lin) / c_a;
        let b1 = (k_ext * theta_k + k_r * theta_k1 + phi_mass) / c_w;
        let b2 = (k_vent * theta_k + q_lin + params.internal_load() + phi_air) / c_a;

        let m11 = 1.0 - dt * a11;
        let m12 = -dt * a12;
        let m21 = -dt * a21;
        let m22 = 1.0 - dt * a22;
        let det = m11 * m22 - m12 * m21;
        if libm::fabs(det) < 1e-300 {
            return Err(ModelError::Numerical("singular zone step system".into()));
        }
        let r1 = state.t_mass + dt * b1;
        let r2 = state.t_air + dt * b2;
        Ok(ZoneState {
            t_mass: (m22 * r1 - m12 * r2) / det,
            t_air: (-m21 * r1 + m11 * r2) / det,
        })
    };

    let tol = 1e-9;
    // full heating below the band
    let high = solve(ctl.q_max * area, 0.0)?;
    if high.t_air <= ctl.t_target - 2.0 + tol {
        return Ok(high);
    }
    // linear ramp inside the band
    let slope = (ctl.q_max - ctl.q_min) / 4.0 * area;
    let q_at_zero = ctl.q_min * area + slope * (ctl.t_target + 2.0);
    let ramp = solve(q_at_zero, slope)?;
    if ramp.t_air <= ctl.t_target + 2.0 + tol {
        return Ok(ramp);
    }
    // full cooling above the band
    solve(ctl.q_min * area, 0.0)
}
