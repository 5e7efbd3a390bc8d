//! Scalar quantum hydrodynamics of matter waves behind an N-slit grating.
//!
//! [`wavefield`] evaluates the closed-form field, [`madelung`] splits it into density,
//! action, velocities and quantum potential, [`trajectories`] integrates Bohmian paths,
//! [`uncertainty`] computes the complex-velocity variance diagnostics and [`oracle`]
//! cross-checks the field by spectral propagation and direct quadrature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod export;
pub mod madelung;
pub mod oracle;
pub mod params;
pub mod stats;
pub mod trajectories;
pub mod uncertainty;
pub mod viscosity;
pub mod wavefield;

pub use error::{Error, Result};
pub use madelung::{decompose, LocalHydro, MadelungFields, DEFAULT_EPS_RHO};
pub use params::{
    derive_mass, fresnel_parameter, talbot_length, ExperimentConfig, GratingConfig, GridSpec,
    PhysicalParams, HBAR,
};
pub use stats::FieldStats;
pub use trajectories::{
    integrate_ensemble, EnsembleConfig, Integrator, Seeding, Trajectory, TrajectoryPoint,
};
pub use uncertainty::{Longitudinal, UncertaintyReport};
pub use viscosity::{ViscosityConfig, ViscosityModel, Waveform};
pub use wavefield::{
    evaluate_field, evaluate_psi, ComplexAmplitude, ComplexField, NSlitWave, PlaneWave, WaveSource,
};
