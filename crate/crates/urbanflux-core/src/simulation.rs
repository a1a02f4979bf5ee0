//! Coupled run driver: hourly radiation solves feed per-zone radiative
//! loads, zones and canopy advance together on a short coupling step, and
//! per-layer energies are accumulated with a machine-precision closure
//! audit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bem::{
    self, ZoneGeometry, ZoneParams, ZoneState,
};
use crate::canopy::{canopy_step, CanopyState, ColumnGeometry, DiffusivityProfile, LayerForcing};
use crate::clock::Instant;
use crate::error::{ModelError, Result};
use crate::morphology::{self, Scene, WallSpan, ZoneRef};
use crate::radiation::{
    aggregate_zone_flux, longwave, shortwave_with_grid, sun_position, view_factors_with,
    AccelGrid, Facet, FacetKind, SkyModel, SurfaceProps, ViewFactorMatrix, ViewFactorOptions,
};

/// One hourly weather record at the forcing height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherRecord {
    pub time: Instant,
    /// Atmospheric temperature at the forcing height [K].
    pub t_atm: f64,
    /// Direct normal irradiance [W/m2].
    pub dni: f64,
    /// Diffuse horizontal irradiance [W/m2].
    pub dhi: f64,
}

/// Ordered hourly weather records covering the run window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    pub records: Vec<WeatherRecord>,
}

impl WeatherSeries {
    pub fn new(records: Vec<WeatherRecord>) -> Result<WeatherSeries> {
        let s = WeatherSeries { records };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.len() < 2 {
            return Err(ModelError::WeatherGap(
                "need at least two weather records".into(),
            ));
        }
        for w in self.records.windows(2) {
            if w[1].time <= w[0].time {
                return Err(ModelError::WeatherGap(
                    "weather timestamps must strictly increase".into(),
                ));
            }
        }
        for r in &self.records {
            if r.dni < 0.0 || r.dhi < 0.0 || !r.t_atm.is_finite() {
                return Err(ModelError::WeatherGap(
                    "irradiances must be non-negative and temperatures finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> Instant {
        self.records[0].time
    }

    /// Linear interpolation of the forcing temperature.
    pub fn t_atm_at(&self, t: Instant) -> Result<f64> {
        let first = self.records[0];
        let last = *self.records.last().unwrap();
        if t < first.time || t > last.time {
            return Err(ModelError::WeatherGap(format!(
                "instant {} outside weather coverage [{}, {}]",
                t.unix(),
                first.time.unix(),
                last.time.unix()
            )));
        }
        let i = match self.records.binary_search_by_key(&t, |r| r.time) {
            Ok(i) => return Ok(self.records[i].t_atm),
            Err(i) => i,
        };
        let a = self.records[i - 1];
        let b = self.records[i];
        let f = (t.unix() - a.time.unix()) as f64 / (b.time.unix() - a.time.unix()) as f64;
        Ok(a.t_atm + f * (b.t_atm - a.t_atm))
    }

    /// Record in effect at `t` (latest record not after `t`).
    pub fn record_at(&self, t: Instant) -> Result<&WeatherRecord> {
        if t < self.records[0].time {
            return Err(ModelError::WeatherGap(format!(
                "instant {} before first weather record",
                t.unix()
            )));
        }
        let i = match self.records.binary_search_by_key(&t, |r| r.time) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Ok(&self.records[i])
    }
}

/// Synthetic clear winter day: sinusoidal air temperature (mean 273.15 K,
/// amplitude 4 K, minimum at 05:00) and clear-sky irradiance from the solar
/// altitude. 25 hourly records starting at `start` (a midnight). Record
/// times are interpreted as solar time (noon record = solar noon), matching
/// the zero-longitude convention of [`RunConfig`]'s defaults.
pub fn synth_weather(start: Instant, latitude_deg: f64) -> WeatherSeries {
    let records = (0..=24)
        .map(|h| {
            let time = start.add_seconds(h * 3600);
            let t_atm = 273.15
                - 4.0 * libm::cos(2.0 * core::f64::consts::PI * (h as f64 - 5.0) / 24.0);
            let sun = sun_position(time, latitude_deg, 0.0);
            let sin_beta = sun.dir.z;
            let dni = if sin_beta > 0.0 {
                900.0 * libm::exp(-0.25 / sin_beta)
            } else {
                0.0
            };
            WeatherRecord {
                time,
                t_atm,
                dni,
                dhi: 0.12 * dni,
            }
        })
        .collect();
    WeatherSeries { records }
}

/// Driver configuration. Defaults reproduce the reference winter-day setup
/// at the Basel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub start: Instant,
    /// Reported window length [s].
    pub duration: f64,
    /// Coupling step for zones and canopy [s].
    pub dt_couple: f64,
    /// Radiation solve cadence [s]; must be a multiple of `dt_couple`.
    pub radiation_interval: f64,
    /// Warm-up days simulated (repeating the first day of weather) and
    /// discarded before the reported window.
    pub spinup_days: usize,
    /// Height of the atmospheric forcing [m].
    pub forcing_height: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Radiative sky temperature deficit below the air temperature [K].
    pub t_sky_offset: f64,
    /// Share of the net ground radiation convected into the first canopy
    /// layer; the remainder is taken up (or supplied) by the soil.
    pub ground_release_fraction: f64,
    pub diffusivity: DiffusivityProfile,
    pub surface: SurfaceProps,
    pub vf: ViewFactorOptions,
}

/// View-factor accuracy tuned for district-scale facet counts.
pub fn city_vf_options() -> ViewFactorOptions {
    ViewFactorOptions {
        tau: 0.08,
        max_leaves: 3000,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            start: Instant::from_civil(2015, 1, 3, 0, 0, 0),
            duration: 86_400.0,
            dt_couple: 60.0,
            radiation_interval: 3600.0,
            spinup_days: 1,
            forcing_height: 60.0,
            // reference latitude; zero longitude makes clock time solar time
            latitude_deg: 47.56,
            longitude_deg: 0.0,
            t_sky_offset: 15.0,
            ground_release_fraction: 0.5,
            diffusivity: DiffusivityProfile::default(),
            surface: SurfaceProps::default(),
            vf: city_vf_options(),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt_couple > 0.0) || !(self.radiation_interval > 0.0) {
            return Err(ModelError::invalid_argument("time steps must be positive"));
        }
        let per = self.radiation_interval / self.dt_couple;
        if (per - libm::round(per)).abs() > 1e-9 || per < 1.0 {
            return Err(ModelError::invalid_argument(
                "coupling step must divide the radiation interval",
            ));
        }
        let intervals = self.duration / self.radiation_interval;
        if (intervals - libm::round(intervals)).abs() > 1e-9 || intervals < 1.0 {
            return Err(ModelError::invalid_argument(
                "duration must be a positive multiple of the radiation interval",
            ));
        }
        Ok(())
    }
}

/// Facetization and view factors, computed once per scene and reusable
/// across runs that share geometry and surface properties.
pub struct RadiationSetup {
    pub facets: Vec<Facet>,
    pub vf: ViewFactorMatrix,
    pub grid: AccelGrid,
}

impl RadiationSetup {
    pub fn build(scene: &Scene, surface: &SurfaceProps, opts: &ViewFactorOptions) -> RadiationSetup {
        let facets = morphology::facetize(scene, surface);
        let vf = view_factors_with(&facets, opts);
        let grid = AccelGrid::build(&facets);
        RadiationSetup { facets, vf, grid }
    }
}

/// Hourly state series of one studied zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSeries {
    pub zone: ZoneRef,
    pub t_air: Vec<f64>,
    pub t_mass: Vec<f64>,
    /// Climatic flux in effect [W/m2 floor].
    pub q_c: Vec<f64>,
    /// Net envelope radiation in effect [W].
    pub phi: Vec<f64>,
}

/// Energy bookkeeping over the reported window [J]. The audited domain is
/// the studied zones plus the canopy column below the pinned top layer;
/// zone-canopy exchange cancels inside it by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyAudit {
    pub zone_storage: f64,
    pub canopy_storage: f64,
    pub climatic: f64,
    pub internal: f64,
    pub radiative: f64,
    pub top_boundary: f64,
}

impl EnergyAudit {
    pub fn residual(&self) -> f64 {
        self.zone_storage + self.canopy_storage
            - (self.climatic + self.internal + self.radiative + self.top_boundary)
    }

    /// Residual relative to the gross energy throughput.
    pub fn residual_relative(&self) -> f64 {
        let gross = self.climatic.abs()
            + self.internal.abs()
            + self.radiative.abs()
            + self.top_boundary.abs()
            + self.zone_storage.abs()
            + self.canopy_storage.abs();
        self.residual().abs() / gross.max(1.0)
    }
}

/// Outputs of one reported day.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResults {
    /// Hourly snapshot instants (window start included).
    pub times: Vec<Instant>,
    /// Canopy potential temperature per snapshot, full column [K].
    pub canopy: Vec<Vec<f64>>,
    pub layer_height: f64,
    /// Number of in-canopy layers (storeys of the tallest studied building).
    pub n_canopy: usize,
    pub zones: Vec<ZoneSeries>,
    /// Floor area per canopy layer [m2].
    pub layer_floor_area: Vec<f64>,
    /// Absorbed solar on studied-zone surfaces, per layer [Wh/m2 floor].
    pub layer_solar: Vec<f64>,
    /// Wall + roof heat loss of each layer's zones [Wh/m2 floor].
    pub layer_dissipation: Vec<f64>,
    /// Anthropogenic release received by each canopy layer [Wh], length
    /// `n_canopy + 1` (roof heat lands one layer above its zone).
    pub layer_release: Vec<f64>,
    /// Heating energy per layer [Wh/m2 floor].
    pub layer_heating: Vec<f64>,
    /// Cooling energy per layer [Wh/m2 floor].
    pub layer_cooling: Vec<f64>,
    /// Net radiation absorbed by the studied-cell ground [Wh/m2 ground].
    pub ground_net: f64,
    pub audit: EnergyAudit,
}

impl RunResults {
    /// Heating + cooling in absolute value [Wh/m2 floor].
    pub fn layer_demand(&self, k: usize) -> f64 {
        self.layer_heating[k] + self.layer_cooling[k]
    }

    /// Floor-area-weighted total of a per-layer series [Wh/m2 floor].
    pub fn area_weighted_total(&self, per_layer: &[f64]) -> f64 {
        let num: f64 = per_layer
            .iter()
            .zip(&self.layer_floor_area)
            .map(|(v, a)| v * a)
            .sum();
        let den: f64 = self.layer_floor_area.iter().sum();
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    pub fn total_heating(&self) -> f64 {
        self.area_weighted_total(&self.layer_heating)
    }

    pub fn total_cooling(&self) -> f64 {
        self.area_weighted_total(&self.layer_cooling)
    }

    pub fn total_demand(&self) -> f64 {
        self.total_heating() + self.total_cooling()
    }

    pub fn total_solar(&self) -> f64 {
        self.area_weighted_total(&self.layer_solar)
    }

    pub fn total_dissipation(&self) -> f64 {
        self.area_weighted_total(&self.layer_dissipation)
    }

    /// Canopy profile at a snapshot hour (0 = window start).
    pub fn canopy_at_hour(&self, hour: usize) -> Result<&[f64]> {
        self.canopy
            .get(hour)
            .map(Vec::as_slice)
            .ok_or(ModelError::OutOfRange {
                index: hour,
                len: self.canopy.len(),
            })
    }
}

/// Cumulative wall + roof heat loss of layer `k`'s zones [Wh/m2 floor].
pub fn surface_dissipation(results: &RunResults, k: usize) -> Result<f64> {
    results
        .layer_dissipation
        .get(k)
        .copied()
        .ok_or(ModelError::OutOfRange {
            index: k,
            len: results.layer_dissipation.len(),
        })
}

struct SimZone {
    zone: ZoneRef,
    params: ZoneParams,
    studied: bool,
}

fn build_zones(scene: &Scene) -> Result<Vec<SimZone>> {
    let dz = scene.storey_height;
    let mut zones = Vec::new();
    for (bi, b) in scene.buildings.iter().enumerate() {
        let set = *scene.param_set(&b.zone_params_ref)?;
        let area = b.area();
        for storey in 0..b.storeys {
            let wall_len: f64 = morphology::exterior_wall_spans(scene, bi, storey)
                .iter()
                .map(WallSpan::length)
                .sum();
            let geometry = ZoneGeometry {
                floor_area: area,
                wall_area: wall_len * dz,
                roof_area: if storey + 1 == b.storeys { area } else { 0.0 },
                volume: area * dz,
            };
            zones.push(SimZone {
                zone: ZoneRef {
                    building: bi,
                    storey,
                },
                params: ZoneParams::new(set, geometry),
                studied: b.studied,
            });
        }
    }
    Ok(zones)
}

/// Full coupled run. Tiles the scene if not yet materialized, builds the
/// radiation setup and delegates to [`run_with_setup`].
pub fn run(scene: &Scene, weather: &WeatherSeries, config: &RunConfig) -> Result<RunResults> {
    let tiled;
    let scene = if scene.materialized_tiling.is_none() {
        tiled = morphology::tile(scene, scene.tiling.0, scene.tiling.1)?;
        &tiled
    } else {
        scene
    };
    let setup = RadiationSetup::build(scene, &config.surface, &config.vf);
    run_with_setup(scene, weather, config, &setup)
}

/// Coupled run over a prebuilt radiation setup (which must match the tiled
/// scene's facetization).
pub fn run_with_setup(
    scene: &Scene,
    weather: &WeatherSeries,
    config: &RunConfig,
    setup: &RadiationSetup,
) -> Result<RunResults> {
    config.validate()?;
    scene.validate()?;
    weather.validate()?;
    if scene.materialized_tiling.is_none() {
        return Err(ModelError::invalid_argument(
            "run_with_setup expects a tiled scene",
        ));
    }

    let col = ColumnGeometry::from_scene(scene, config.forcing_height)?;
    let n_total = col.n_total();
    let n_canopy = scene.n_layers();
    if n_canopy + 1 > n_total {
        return Err(ModelError::invalid_scene(
            "buildings reach the forcing height; no room for the roof exchange layer",
        ));
    }
    let dz = scene.storey_height;
    let studied_buildings: Vec<bool> = scene.buildings.iter().map(|b| b.studied).collect();
    let zones = build_zones(scene)?;
    let zone_index: alloc::collections::BTreeMap<ZoneRef, usize> = zones
        .iter()
        .enumerate()
        .map(|(i, z)| (z.zone, i))
        .collect();

    // layer floor areas of the studied cell
    let layer_floor_area: Vec<f64> = (0..n_canopy)
        .map(|k| morphology::layer_stats(scene, k).map(|s| s.s_f))
        .collect::<Result<_>>()?;

    // initial state: canopy at the first record's forcing temperature;
    // controlled zones at the control target with the mass node at its
    // steady level (its multi-week time constant rules out spinning it up)
    let t0 = weather.records[0].t_atm;
    let mut canopy = CanopyState::uniform(t0, n_total, n_canopy);
    let mut states: Vec<ZoneState> = zones
        .iter()
        .map(|z| {
            let p = &z.params;
            let c = &p.set.control;
            if c.q_max <= 0.0 && c.q_min >= 0.0 {
                return ZoneState::uniform(t0);
            }
            let denom = p.cond_int() + p.cond_ext() + p.cond_roof();
            let t_mass = if denom > 0.0 {
                (p.cond_int() * c.t_target + (p.cond_ext() + p.cond_roof()) * t0) / denom
            } else {
                c.t_target
            };
            ZoneState {
                t_mass,
                t_air: c.t_target,
            }
        })
        .collect();

    let steps_per_interval = libm::round(config.radiation_interval / config.dt_couple) as usize;
    let intervals_per_day = libm::round(config.duration / config.radiation_interval) as usize;
    let day_len = config.duration as i64;
    let weather_start = config.start;

    // accumulators for the reported window
    let mut audit = EnergyAudit::default();
    let mut layer_solar_j = vec![0.0; n_canopy];
    let mut ground_net_j = 0.0;
    let mut ground_area = 0.0;
    let mut layer_dissipation_j = vec![0.0; n_canopy];
    let mut layer_release_j = vec![0.0; n_canopy + 1];
    let mut layer_heating_j = vec![0.0; n_canopy];
    let mut layer_cooling_j = vec![0.0; n_canopy];
    let mut times = Vec::new();
    let mut canopy_series: Vec<Vec<f64>> = Vec::new();
    let mut zone_series: Vec<ZoneSeries> = zones
        .iter()
        .filter(|z| z.studied)
        .map(|z| ZoneSeries {
            zone: z.zone,
            t_air: Vec::new(),
            t_mass: Vec::new(),
            q_c: Vec::new(),
            phi: Vec::new(),
        })
        .collect();
    let studied_ids: Vec<usize> = zones
        .iter()
        .enumerate()
        .filter(|(_, z)| z.studied)
        .map(|(i, _)| i)
        .collect();

    let mut phi = vec![bem::EnvelopeRadiation::default(); zones.len()];
    let mut release = vec![0.0; n_total];
    let mut zone_storage_start = 0.0;
    let mut canopy_storage_start = 0.0;

    let storage = |states: &[ZoneState], canopy: &CanopyState| -> (f64, f64) {
        let zs: f64 = studied_ids
            .iter()
            .map(|&i| {
                zones[i].params.cap_mass() * states[i].t_mass
                    + zones[i].params.cap_air() * states[i].t_air
            })
            .sum();
        let cs: f64 = (0..n_total - 1)
            .map(|k| col.layer_capacity(k) * canopy.theta[k])
            .sum();
        (zs, cs)
    };

    let snapshot = |times: &mut Vec<Instant>,
                    canopy_series: &mut Vec<Vec<f64>>,
                    zone_series: &mut Vec<ZoneSeries>,
                    t: Instant,
                    canopy: &CanopyState,
                    states: &[ZoneState],
                    phi: &[bem::EnvelopeRadiation]| {
        times.push(t);
        canopy_series.push(canopy.theta.clone());
        for zs in zone_series.iter_mut() {
            let i = zone_index[&zs.zone];
            zs.t_air.push(states[i].t_air);
            zs.t_mass.push(states[i].t_mass);
            zs.q_c.push(bem::climatic_flux(states[i].t_air, &zones[i].params));
            zs.phi.push(phi[i].total());
        }
    };

    for day in 0..=config.spinup_days {
        let recording = day == config.spinup_days;
        let day_start = config.start.add_seconds(day as i64 * day_len);
        if recording {
            let (zs, cs) = storage(&states, &canopy);
            zone_storage_start = zs;
            canopy_storage_start = cs;
        }
        for interval in 0..intervals_per_day {
            let t_interval = day_start.add_seconds(interval as i64 * config.radiation_interval as i64);
            // weather is queried at the same civil time on every day
            let t_weather = weather_start
                .add_seconds((t_interval.unix() - day_start.unix()).rem_euclid(day_len));
            let rec = *weather.record_at(t_weather)?;
            let sun = sun_position(t_weather, config.latitude_deg, config.longitude_deg);
            let sky = SkyModel {
                dni: if sun.dir.z > 0.0 { rec.dni } else { 0.0 },
                dhi: rec.dhi,
                t_sky: rec.t_atm - config.t_sky_offset,
                sun_dir: sun.dir,
            };
            // surface temperatures: the adjacent canopy layer (roofs face
            // the layer above their storey, ground the first layer)
            let temps: Vec<f64> = setup
                .facets
                .iter()
                .map(|f| canopy.theta[facet_air_layer(f).min(n_total - 1)])
                .collect();
            let sw = shortwave_with_grid(&setup.facets, &setup.vf, &sky, &setup.grid)
                .map_err(|e| stamp(e, t_interval))?;
            let lw = longwave(&setup.facets, &setup.vf, &temps, &sky)
                .map_err(|e| stamp(e, t_interval))?;
            let agg = aggregate_zone_flux(&setup.facets, &sw, &lw, &studied_buildings, n_canopy)?;
            for p in phi.iter_mut() {
                *p = bem::EnvelopeRadiation::default();
            }
            for (zr, v) in &agg.zone_phi {
                phi[zone_index[zr]] = bem::EnvelopeRadiation {
                    wall: v[0],
                    roof: v[1],
                };
            }
            // convective release of net surface radiation into the canopy,
            // held constant over the radiation interval
            for r in release.iter_mut() {
                *r = 0.0;
            }
            let mut ground_q = 0.0;
            let mut ground_a = 0.0;
            for (fi, f) in setup.facets.iter().enumerate() {
                let q = sw[fi] + lw[fi];
                match f.owner {
                    Some(zr) => {
                        let i = zone_index[&zr];
                        if !zones[i].studied {
                            continue;
                        }
                        let frac = match f.kind {
                            FacetKind::Roof => zones[i].params.roof_release_fraction(),
                            _ => zones[i].params.canopy_release_fraction(),
                        };
                        release[facet_air_layer(f).min(n_total - 2)] += frac * q * f.area;
                    }
                    None => {
                        // ground of the studied cell only; the column
                        // represents that cell and the tiling is periodic
                        let c = f.rect.center();
                        if (0.0..scene.plot_dx).contains(&c.x)
                            && (0.0..scene.plot_dy).contains(&c.y)
                        {
                            ground_q += q * f.area;
                            ground_a += f.area;
                        }
                    }
                }
            }
            if ground_a > 0.0 {
                release[0] += config.ground_release_fraction * ground_q / ground_a * col.s_c[0];
            }
            let release_total: f64 = release.iter().sum();
            if recording {
                if interval == 0 {
                    snapshot(
                        &mut times,
                        &mut canopy_series,
                        &mut zone_series,
                        t_interval,
                        &canopy,
                        &states,
                        &phi,
                    );
                }
                for k in 0..n_canopy {
                    layer_solar_j[k] += agg.layer_sw[k] * config.radiation_interval;
                }
                ground_net_j += ground_q * config.radiation_interval;
                ground_area = ground_a;
            }

            for step in 0..steps_per_interval {
                let t = t_interval.add_seconds((step as f64 * config.dt_couple) as i64);
                let t_end_weather = weather_start.add_seconds(
                    (t.unix() + config.dt_couple as i64 - day_start.unix()).rem_euclid(day_len),
                );
                // day boundary maps to 0; use the full-day instant instead
                let t_end_weather = if t_end_weather == weather_start
                    && t.unix() + config.dt_couple as i64 > day_start.unix()
                {
                    weather_start.add_seconds(day_len)
                } else {
                    t_end_weather
                };
                let t_top = weather.t_atm_at(t_end_weather)?;

                let dt = config.dt_couple;
                let mut forcing = LayerForcing::zero(n_total);
                forcing.radiative.copy_from_slice(&release);
                if recording {
                    audit.radiative += release_total * dt;
                }
                for (i, z) in zones.iter().enumerate() {
                    if !z.studied {
                        // replica zones influence neither the radiation
                        // temperatures nor the column; skip their dynamics
                        continue;
                    }
                    let s = z.zone.storey;
                    let theta_k = canopy.theta[s];
                    let theta_k1 = canopy.theta[s + 1];
                    let new_state = bem::zone_step(&states[i], theta_k, theta_k1, phi[i], &z.params, dt)
                        .map_err(|e| stamp(e, t))?;
                    let fx = bem::surface_fluxes(&new_state, theta_k, theta_k1, &z.params);
                    let g = &z.params.geometry;
                    forcing.wall[s] += fx.wall * g.wall_area;
                    forcing.roof[s + 1] += fx.roof * g.roof_area;
                    forcing.vent[s] += fx.vent * g.volume;
                    if recording {
                        let q_c = fx.climatic * g.floor_area * dt;
                        audit.climatic += q_c;
                        audit.internal += z.params.internal_load() * dt;
                        let (phi_air, phi_mass) = bem::split_radiative(phi[i], &z.params);
                        audit.radiative += (phi_air + phi_mass) * dt;
                        let wall_j = fx.wall * g.wall_area * dt;
                        let roof_j = fx.roof * g.roof_area * dt;
                        layer_dissipation_j[s] += wall_j + roof_j;
                        layer_release_j[s] += wall_j;
                        layer_release_j[s + 1] += roof_j;
                        if fx.climatic >= 0.0 {
                            layer_heating_j[s] += q_c;
                        } else {
                            layer_cooling_j[s] -= q_c;
                        }
                    }
                    states[i] = new_state;
                }
                let (next, diag) =
                    canopy_step(&canopy, &col, &forcing, &config.diffusivity, Some(t_top), dt)
                        .map_err(|e| stamp(e, t))?;
                canopy = next;
                if recording {
                    audit.top_boundary += diag.top_boundary_heat;
                }
            }
            if recording {
                snapshot(
                    &mut times,
                    &mut canopy_series,
                    &mut zone_series,
                    t_interval.add_seconds(config.radiation_interval as i64),
                    &canopy,
                    &states,
                    &phi,
                );
            }
        }
    }

    let (zs_end, cs_end) = storage(&states, &canopy);
    audit.zone_storage = zs_end - zone_storage_start;
    audit.canopy_storage = cs_end - canopy_storage_start;

    let to_wh_m2 = |j: &[f64]| -> Vec<f64> {
        j.iter()
            .zip(&layer_floor_area)
            .map(|(v, a)| if *a > 0.0 { v / 3600.0 / a } else { 0.0 })
            .collect()
    };
    Ok(RunResults {
        times,
        canopy: canopy_series,
        layer_height: dz,
        n_canopy,
        zones: zone_series,
        layer_solar: to_wh_m2(&layer_solar_j),
        layer_dissipation: to_wh_m2(&layer_dissipation_j),
        layer_release: layer_release_j.iter().map(|v| v / 3600.0).collect(),
        layer_heating: to_wh_m2(&layer_heating_j),
        layer_cooling: to_wh_m2(&layer_cooling_j),
        ground_net: if ground_area > 0.0 {
            ground_net_j / 3600.0 / ground_area
        } else {
            0.0
        },
        layer_floor_area,
        audit,
    })
}

/// Canopy layer a facet exchanges with: roofs face the layer above their
/// storey, walls their own storey's layer, ground the first layer.
fn facet_air_layer(f: &Facet) -> usize {
    match f.kind {
        FacetKind::Roof => f.layer + 1,
        _ => f.layer,
    }
}

fn stamp(e: ModelError, t: Instant) -> ModelError {
    let (y, m, d) = t.civil_date();
    let s = t.seconds_of_day();
    ModelError::Numerical(format!(
        "at {y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z: {e}",
        s / 3600,
        (s / 60) % 60,
        s % 60
    ))
}

// ---------------------------------------------------------------------------
// case comparison

/// Per-case digest emitted by [`compare_cases`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub name: String,
    /// Totals [Wh/m2 floor].
    pub heating: f64,
    pub cooling: f64,
    pub demand: f64,
    pub solar: f64,
    pub dissipation: f64,
    pub layer_demand: Vec<f64>,
    pub layer_solar: Vec<f64>,
    /// Canopy profiles at 05:00 and 15:00 of the reported day [K].
    pub theta_05: Vec<f64>,
    pub theta_15: Vec<f64>,
    /// Relative differences vs the first case (0 for the first case).
    pub rel_demand: f64,
    pub rel_solar: f64,
    pub rel_dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub entries: Vec<ComparisonEntry>,
}

fn rel_diff(v: f64, base: f64) -> f64 {
    if base.abs() > 0.0 {
        (v - base) / base
    } else {
        0.0
    }
}

/// Cross-case digest. All runs must share snapshot instants and layer
/// heights (same weather and run configuration).
pub fn compare_cases(named: &[(&str, &RunResults)]) -> Result<Comparison> {
    let Some((_, first)) = named.first() else {
        return Err(ModelError::invalid_argument("no runs to compare"));
    };
    for (name, r) in named {
        if r.times != first.times || r.layer_height != first.layer_height {
            return Err(ModelError::invalid_argument(format!(
                "run '{name}' does not share the reference run window"
            )));
        }
        if r.canopy.len() < 16 {
            return Err(ModelError::invalid_argument(
                "runs must cover at least 15 hourly snapshots",
            ));
        }
    }
    let base_demand = first.total_demand();
    let base_solar = first.total_solar();
    let base_diss = first.total_dissipation();
    let entries = named
        .iter()
        .map(|(name, r)| {
            let demand = r.total_demand();
            let solar = r.total_solar();
            let dissipation = r.total_dissipation();
            ComparisonEntry {
                name: String::from(*name),
                heating: r.total_heating(),
                cooling: r.total_cooling(),
                demand,
                solar,
                dissipation,
                layer_demand: (0..r.n_canopy).map(|k| r.layer_demand(k)).collect(),
                layer_solar: r.layer_solar.clone(),
                theta_05: r.canopy[5].clone(),
                theta_15: r.canopy[15].clone(),
                rel_demand: rel_diff(demand, base_demand),
                rel_solar: rel_diff(solar, base_solar),
                rel_dissipation: rel_diff(dissipation, base_diss),
            }
        })
        .collect();
    Ok(Comparison { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::{ControlParams, ZoneParamSet};
    use crate::morphology::{generate_case, CaseKind};

    fn constant_weather(t_atm: f64) -> WeatherSeries {
        let start = Instant::from_civil(2015, 1, 3, 0, 0, 0);
        WeatherSeries::new(
            (0..=24)
                .map(|h| WeatherRecord {
                    time: start.add_seconds(h * 3600),
                    t_atm,
                    dni: 0.0,
                    dhi: 0.0,
                })
                .collect(),
        )
        .unwrap()
    }

    fn small_scene() -> Scene {
        let mut scene = generate_case(CaseKind::RegularSlabs);
        scene.tiling = (1, 1);
        scene
    }

    fn fast_config() -> RunConfig {
        RunConfig {
            dt_couple: 300.0,
            spinup_days: 0,
            vf: ViewFactorOptions {
                tau: 0.3,
                max_leaves: 200,
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn synthetic_weather_values() {
        let start = Instant::from_civil(2015, 1, 3, 0, 0, 0);
        let w = synth_weather(start, 47.56);
        assert_eq!(w.records.len(), 25);
        w.validate().unwrap();
        assert_eq!(w.records[0].dni, 0.0);
        assert_eq!(w.records[0].dhi, 0.0);
        // minimum temperature at 05:00
        let min = w
            .records
            .iter()
            .min_by(|a, b| a.t_atm.partial_cmp(&b.t_atm).unwrap())
            .unwrap();
        assert_eq!(min.time.seconds_of_day(), 5 * 3600);
        assert!((min.t_atm - 269.15).abs() < 1e-9);
        // clear-sky noon irradiance near the low winter sun
        let noon = &w.records[12];
        assert!((noon.dni - 428.0).abs() < 5.0, "noon DNI {}", noon.dni);
        assert!((noon.dhi - 0.12 * noon.dni).abs() < 1e-9);
    }

    #[test]
    fn weather_interpolation_and_gaps() {
        let w = constant_weather(270.0);
        let t = w.records[0].time.add_seconds(1800);
        assert_eq!(w.t_atm_at(t).unwrap(), 270.0);
        assert!(w.t_atm_at(w.records[0].time.add_seconds(-1)).is_err());
        assert!(w
            .t_atm_at(w.records.last().unwrap().time.add_seconds(1))
            .is_err());
    }

    #[test]
    fn global_fixed_point_without_drivers() {
        // no sun, flat forcing at the initial temperature, control and
        // internal gains off, sky at air temperature: nothing may move
        let mut scene = small_scene();
        let set = ZoneParamSet {
            q_internal: 0.0,
            control: ControlParams {
                q_min: 0.0,
                q_max: 0.0,
                t_target: 292.15,
            },
            ..ZoneParamSet::default()
        };
        scene.zone_params.insert("default".into(), set);
        let weather = constant_weather(270.0);
        let config = RunConfig {
            t_sky_offset: 0.0,
            ..fast_config()
        };
        let r = run(&scene, &weather, &config).unwrap();
        for snap in &r.canopy {
            for th in snap {
                assert!((th - 270.0).abs() < 1e-9, "theta drifted: {th}");
            }
        }
        for z in &r.zones {
            for (ta, tw) in z.t_air.iter().zip(&z.t_mass) {
                assert!((ta - 270.0).abs() < 1e-9);
                assert!((tw - 270.0).abs() < 1e-9);
            }
        }
        // at a global fixed point the audit terms are all zero; the
        // residual is pure rounding noise from the ~1e12 J storage sums
        assert!(r.audit.residual().abs() < 1.0, "residual {} J", r.audit.residual());
    }

    #[test]
    fn audit_closes_with_drivers_on() {
        let scene = small_scene();
        let weather = synth_weather(Instant::from_civil(2015, 1, 3, 0, 0, 0), 47.56);
        let r = run(&scene, &weather, &fast_config()).unwrap();
        assert!(
            r.audit.residual_relative() < 1e-9,
            "audit residual {}",
            r.audit.residual_relative()
        );
        // winter day: heating needed in every layer
        for k in 0..r.n_canopy {
            assert!(r.layer_heating[k] > 0.0, "layer {k} heating absent");
        }
        assert_eq!(r.times.len(), 25);
        assert_eq!(r.canopy.len(), 25);
    }

    #[test]
    fn determinism() {
        let scene = small_scene();
        let weather = synth_weather(Instant::from_civil(2015, 1, 3, 0, 0, 0), 47.56);
        let a = run(&scene, &weather, &fast_config()).unwrap();
        let b = run(&scene, &weather, &fast_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn comparison_of_identical_runs_is_zero() {
        let scene = small_scene();
        let weather = synth_weather(Instant::from_civil(2015, 1, 3, 0, 0, 0), 47.56);
        let r = run(&scene, &weather, &fast_config()).unwrap();
        let cmp = compare_cases(&[("a", &r), ("b", &r)]).unwrap();
        assert_eq!(cmp.entries[1].rel_demand, 0.0);
        assert_eq!(cmp.entries[1].rel_solar, 0.0);
        assert_eq!(cmp.entries[1].rel_dissipation, 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = RunConfig {
            dt_couple: 7.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let ok = RunConfig {
            dt_couple: 30.0,
            ..RunConfig::default()
        };
        assert!(ok.validate().is_ok());
    }
}
