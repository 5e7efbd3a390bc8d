//! Physical constants, experiment geometry and sampling grids.
//!
//! All public quantities are SI. Field evaluation downstream works in the
//! dimensionless pair `(x / b, fresnel_parameter(z))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::viscosity::ViscosityConfig;

/// Reduced Planck constant, CODATA 2018 (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Particle and beam parameters. The mass is always derived from the de Broglie
/// wavelength and the longitudinal speed, so `mass * v_z * lambda == 2π ħ` to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalParams {
    hbar: f64,
    mass: f64,
    lambda: f64,
    v_z: f64,
}

impl PhysicalParams {
    pub fn new(lambda: f64, v_z: f64) -> Result<Self> {
        let mass = derive_mass(lambda, v_z)?;
        Ok(Self {
            hbar: HBAR,
            mass,
            lambda,
            v_z,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v_z(&self) -> f64 {
        self.v_z
    }

    /// Longitudinal wavenumber 2π/λ (1/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda
    }

    /// Kinetic energy of the longitudinal plane wave, ħ²k²/2m (J).
    pub fn longitudinal_energy(&self) -> f64 {
        let p = self.hbar * self.wavenumber();
        p * p / (2.0 * self.mass)
    }

    /// Brownian diffusion coefficient ħ/2m (m²/s).
    pub fn diffusion_coefficient(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    /// Paraxial time of flight to distance `z`.
    pub fn time_of_flight(&self, z: f64) -> f64 {
        z / self.v_z
    }
}

/// `m = 2πħ / (λ v)`.
pub fn derive_mass(lambda: f64, v_z: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {lambda:e}"
        )));
    }
    if !(v_z > 0.0 && v_z.is_finite()) {
        return Err(Error::domain(format!(
            "speed must be positive, got {v_z:e}"
        )));
    }
    Ok(2.0 * PI * HBAR / (lambda * v_z))
}

/// Near-field self-imaging distance `2 d² / λ`.
pub fn talbot_length(pitch_d: f64, lambda: f64) -> Result<f64> {
    if !(pitch_d > 0.0 && pitch_d.is_finite()) {
        return Err(Error::domain(format!(
            "pitch must be positive, got {pitch_d:e}"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "wavelength must be positive, got {lambda:e}"
        )));
    }
    Ok(2.0 * pitch_d * pitch_d / lambda)
}

/// `λ z / (2π b²)`: the single evolution variable of the N-slit solution.
pub fn fresnel_parameter(z: f64, params: &PhysicalParams, grating: &GratingConfig) -> f64 {
    let b = grating.slit_width();
    params.lambda() * z / (2.0 * PI * b * b)
}

/// Gaussian-slit grating, centered on `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GratingConfig {
    n_slits: usize,
    slit_width_b: f64,
    pitch_d: f64,
}

impl GratingConfig {
    pub fn new(n_slits: usize, slit_width_b: f64, pitch_d: f64) -> Result<Self> {
        if n_slits == 0 {
            return Err(Error::domain("grating needs at least one slit"));
        }
        if !(slit_width_b > 0.0 && slit_width_b.is_finite()) {
            return Err(Error::domain(format!(
                "slit width must be positive, got {slit_width_b:e}"
            )));
        }
        if !(pitch_d > slit_width_b && pitch_d.is_finite()) {
            return Err(Error::domain(format!(
                "pitch {pitch_d:e} must exceed slit width {slit_width_b:e}"
            )));
        }
        Ok(Self {
            n_slits,
            slit_width_b,
            pitch_d,
        })
    }

    pub fn n_slits(&self) -> usize {
        self.n_slits
    }

    pub fn slit_width(&self) -> f64 {
        self.slit_width_b
    }

    pub fn pitch(&self) -> f64 {
        self.pitch_d
    }

    /// `x_n = (n - (N-1)/2) d`.
    pub fn slit_center(&self, n: usize) -> f64 {
        (n as f64 - (self.n_slits as f64 - 1.0) / 2.0) * self.pitch_d
    }

    pub fn slit_centers(&self) -> Vec<f64> {
        (0..self.n_slits).map(|n| self.slit_center(n)).collect()
    }

    /// Distance from the axis to the outermost slit center.
    pub fn half_extent(&self) -> f64 {
        (self.n_slits as f64 - 1.0) * self.pitch_d / 2.0
    }
}

/// Uniform rectangular `(x, z)` sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub nz: usize,
}

impl GridSpec {
    pub fn new(
        x_min: f64,
        x_max: f64,
        nx: usize,
        z_min: f64,
        z_max: f64,
        nz: usize,
    ) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            nx,
            z_min,
            z_max,
            nz,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.z_min, self.z_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("grid bounds must be finite"));
        }
        if !(self.x_max > self.x_min) {
            return Err(Error::domain("grid needs x_max > x_min"));
        }
        if !(self.z_min >= 0.0 && self.z_max >= self.z_min) {
            return Err(Error::domain("grid needs z_max >= z_min >= 0"));
        }
        if self.nx < 2 || self.nz < 1 {
            return Err(Error::domain(format!(
                "grid needs nx >= 2 and nz >= 1, got {}x{}",
                self.nx, self.nz
            )));
        }
        if self.nz == 1 && self.z_max != self.z_min {
            return Err(Error::domain("a single z-slice needs z_max == z_min"));
        }
        Ok(())
    }

    /// The grid of the interference carpet: x in [-(N/2) d, (N/2) d], z in [0, periods z_T].
    pub fn carpet(
        params: &PhysicalParams,
        grating: &GratingConfig,
        talbot_periods: f64,
        nx: usize,
        nz: usize,
    ) -> Result<Self> {
        let half = grating.n_slits() as f64 * grating.pitch() / 2.0;
        let z_t = talbot_length(grating.pitch(), params.lambda())?;
        Self::new(-half, half, nx, 0.0, talbot_periods * z_t, nz)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    /// Zero for a single slice.
    pub fn dz(&self) -> f64 {
        if self.nz > 1 {
            (self.z_max - self.z_min) / (self.nz - 1) as f64
        } else {
            0.0
        }
    }

    /// Node coordinate, `x_min + i dx` evaluated as a two-sided interpolation so that a
    /// grid centered on zero is mirror-exact.
    pub fn x(&self, i: usize) -> f64 {
        lerp(self.x_min, self.x_max, i, self.nx)
    }

    pub fn z(&self, j: usize) -> f64 {
        if self.nz == 1 {
            self.z_min
        } else {
            lerp(self.z_min, self.z_max, j, self.nz)
        }
    }

    /// Index of the node closest to `x = 0` (lowest index on ties).
    pub fn axis_index(&self) -> usize {
        let mut best = 0;
        for i in 1..self.nx {
            if self.x(i).abs() < self.x(best).abs() {
                best = i;
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    let steps = (n - 1) as f64;
    ((n - 1 - i) as f64 * lo + i as f64 * hi) / steps
}

/// The JSON experiment block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda_m: f64,
    pub v_z_mps: f64,
    pub n_slits: usize,
    pub slit_width_m: f64,
    pub pitch_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<ViscosityConfig>,
}

impl Default for ExperimentConfig {
    /// Fullerene beam through a nine-slit grating.
    fn default() -> Self {
        Self {
            lambda_m: 5e-12,
            v_z_mps: 100.0,
            n_slits: 9,
            slit_width_m: 25e-9,
            pitch_m: 250e-9,
            viscosity: None,
        }
    }
}

impl ExperimentConfig {
    pub fn physical(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.lambda_m, self.v_z_mps)
    }

    pub fn grating(&self) -> Result<GratingConfig> {
        GratingConfig::new(self.n_slits, self.slit_width_m, self.pitch_m)
    }

    pub fn talbot_length(&self) -> Result<f64> {
        talbot_length(self.pitch_m, self.lambda_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mass_of_fullerene_beam() {
        // 6.62607015e-34 / (5e-12 * 100)
        let m = derive_mass(5e-12, 100.0).unwrap();
        assert_relative_eq!(m, 1.325_214_03e-24, max_relative = 1e-8);
        let fast = derive_mass(5e-12, 200.0).unwrap();
        assert_relative_eq!(fast, 6.626_070_15e-25, max_relative = 1e-8);
        let long = derive_mass(10e-12, 100.0).unwrap();
        assert_relative_eq!(long, m / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn mass_rejects_non_positive() {
        assert!(matches!(derive_mass(0.0, 100.0), Err(Error::Domain(_))));
        assert!(matches!(derive_mass(5e-12, -1.0), Err(Error::Domain(_))));
        assert!(derive_mass(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn talbot_values() {
        let z_t = talbot_length(250e-9, 5e-12).unwrap();
        assert!((z_t - 0.025).abs() <= 4.0 * f64::EPSILON * 0.025);
        assert_relative_eq!(
            talbot_length(100e-9, 5e-12).unwrap(),
            0.004,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            talbot_length(500e-9, 5e-12).unwrap(),
            4.0 * z_t,
            max_relative = 1e-14
        );
        assert!(talbot_length(-1.0, 5e-12).is_err());
        assert!(talbot_length(1.0, 0.0).is_err());
    }

    #[test]
    fn fresnel_parameter_at_talbot_distances() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        assert_eq!(fresnel_parameter(0.0, &p, &g), 0.0);
        assert_relative_eq!(
            fresnel_parameter(0.025, &p, &g),
            100.0 / PI,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            fresnel_parameter(0.15, &p, &g),
            600.0 / PI,
            max_relative = 1e-13
        );
    }

    #[test]
    fn grating_geometry() {
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let c = g.slit_centers();
        assert_eq!(c.len(), 9);
        assert_eq!(c[4], 0.0);
        for n in 0..9 {
            assert_eq!(c[n], -c[8 - n]);
        }
        assert_relative_eq!(g.half_extent(), 1e-6, max_relative = 1e-15);
        assert!(GratingConfig::new(0, 1e-9, 2e-9).is_err());
        assert!(GratingConfig::new(3, 2e-9, 2e-9).is_err());
        assert!(GratingConfig::new(3, 0.0, 2e-9).is_err());
    }

    #[test]
    fn grid_nodes() {
        let g = GridSpec::new(-1.0, 1.0, 5, 0.0, 2.0, 3).unwrap();
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(4), 1.0);
        assert_eq!(g.x(2), 0.0);
        assert_eq!(g.z(1), 1.0);
        assert_eq!(g.axis_index(), 2);
        let even = GridSpec::new(-1.0, 1.0, 4, 0.0, 0.0, 1).unwrap();
        assert_eq!(even.axis_index(), 1);
        assert_eq!(even.dz(), 0.0);
        assert!(GridSpec::new(1.0, -1.0, 4, 0.0, 0.0, 1).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 1, 0.0, 0.0, 1).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 4, -1.0, 0.0, 2).is_err());
    }

    #[test]
    fn experiment_json_rejects_unknown_keys() {
        let ok = r#"{"lambda_m": 5e-12, "v_z_mps": 100.0, "n_slits": 9, "slit_width_m": 25e-9, "pitch_m": 250e-9}"#;
        let cfg: ExperimentConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let bad = r#"{"lambda_m": 5e-12, "v_z_mps": 100.0, "n_slits": 9, "slit_width_m": 25e-9, "pitch_m": 250e-9, "mass": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
        let missing =
            r#"{"lambda_m": 5e-12, "v_z_mps": 100.0, "n_slits": 9, "slit_width_m": 25e-9}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(missing).is_err());
    }

    proptest! {
        #[test]
        fn de_broglie_closure(lambda in 1e-13f64..1e-9, v in 1.0f64..1e4) {
            let p = PhysicalParams::new(lambda, v).unwrap();
            let h = 2.0 * PI * p.hbar();
            prop_assert!(((p.mass() * p.v_z() * p.lambda()) - h).abs() / h < 1e-12);
        }

        #[test]
        fn talbot_homogeneity(d in 1e-8f64..1e-5, lambda in 1e-13f64..1e-10, s in 0.1f64..10.0) {
            let a = talbot_length(d, lambda).unwrap();
            let b = talbot_length(s * d, s * s * lambda).unwrap();
            prop_assert!((a - b).abs() / a < 1e-14);
        }

        #[test]
        fn centered_grid_is_mirror_exact(half in 1e-9f64..1e-3, n in 2usize..400) {
            let g = GridSpec::new(-half, half, n, 0.0, 0.0, 1).unwrap();
            for i in 0..n {
                prop_assert_eq!(g.x(i), -g.x(n - 1 - i));
            }
        }
    }
}
