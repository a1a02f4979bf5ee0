//! Coupled urban micro-climate and building energy engine.
//!
//! The engine couples three sub-models over a shared shoebox description of
//! an urban block:
//!
//! * [`canopy`] — a discrete-layer column of canopy air with vertical
//!   turbulent diffusion, building heat sources and roof-line porosity,
//! * [`bem`] — one two-node (thermal mass + indoor air) RC model per storey
//!   of each building,
//! * [`radiation`] — a radiosity solver (shortwave with shading and
//!   reflections, longwave with sky exchange) over the facetized scene.
//!
//! [`morphology`] defines the scene model and the four built-in test
//! morphologies, and [`simulation`] orchestrates the per-step coupling,
//! energy accounting and reporting.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `urbanflux` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bem;
pub mod canopy;
pub mod clock;
pub mod error;
pub mod geom;
pub mod morphology;
pub mod radiation;
pub mod simulation;

pub use error::ModelError;

/// Physical constants shared by the sub-models.
pub mod constants {
    /// Density of air [kg m^-3].
    pub const AIR_DENSITY: f64 = 1.2;
    /// Specific heat capacity of air [J kg^-1 K^-1].
    pub const AIR_SPECIFIC_HEAT: f64 = 1005.0;
    /// Volumetric heat capacity of air, C_p rho [J K^-1 m^-3].
    pub const AIR_VOLUMETRIC_HEAT: f64 = AIR_DENSITY * AIR_SPECIFIC_HEAT;
    /// Stefan-Boltzmann constant [W m^-2 K^-4].
    pub const STEFAN_BOLTZMANN: f64 = 5.670374419e-8;
}
