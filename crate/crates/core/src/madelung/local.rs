//! Pointwise hydrodynamic quantities from the analytic value, gradient and second
//! derivative of the wave function. The amplitude and density forms of the quantum
//! potential are evaluated along separate arithmetic paths.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wavefield::{WaveJet, WaveSource};

/// Density below which the Bohmian velocity is treated as undefined.
pub const DENSITY_GUARD: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalHydro {
    pub rho: f64,
    /// Current velocity `(ħ/m) Im(∂xΨ/Ψ)` (m/s).
    pub v_x: f64,
    /// Osmotic velocity `(ħ/m) Re(∂xΨ/Ψ)` (m/s).
    pub u_x: f64,
    /// `-(ħ²/2m) R''/R` (J).
    pub q_amplitude: f64,
    /// `(ħ²/8m)(ρ'/ρ)² - (ħ²/4m) ρ''/ρ` (J).
    pub q_density: f64,
    pub p1: f64,
    pub p2: f64,
}

impl LocalHydro {
    pub fn at<S: WaveSource>(source: &S, x: f64, z: f64) -> Result<Self> {
        let jet = source.jet(x, z);
        Self::from_jet(source, &jet, x, z)
    }

    pub fn from_jet<S: WaveSource>(source: &S, jet: &WaveJet, x: f64, z: f64) -> Result<Self> {
        let p = source.params();
        let (hbar, m) = (p.hbar(), p.mass());
        let rho = jet.density();
        if !(rho >= DENSITY_GUARD) {
            return Err(Error::SingularPoint { x, z, rho });
        }
        let w = jet.log_derivative();

        // amplitude route: R = |Ψ|, R' = Re(Ψ*Ψ')/R, R'' = (Re(Ψ*Ψ'') + |Ψ'|² - R'²)/R
        let r = rho.sqrt();
        let cross1 = (jet.psi.conj() * jet.dpsi_dx).re;
        let cross2 = (jet.psi.conj() * jet.d2psi_dx2).re;
        let r1 = cross1 / r;
        let r2 = (cross2 + jet.dpsi_dx.norm_sqr() - r1 * r1) / r;
        let q_amplitude = -hbar * hbar / (2.0 * m) * r2 / r;

        // density route: ρ' = 2Re(Ψ*Ψ'), ρ'' = 2Re(Ψ*Ψ'') + 2|Ψ'|²
        let d1 = 2.0 * cross1;
        let d2 = 2.0 * cross2 + 2.0 * jet.dpsi_dx.norm_sqr();
        let g = d1 / rho;
        let q_density = hbar * hbar / (8.0 * m) * g * g - hbar * hbar / (4.0 * m) * d2 / rho;

        // pressures on ρ_M = m ρ
        let c = hbar * hbar / (m * m);
        let p1 = -c / 4.0 * (m * d2);
        let p2 = c / 8.0 * (m * d1) * (m * d1) / (m * rho);

        Ok(Self {
            rho,
            v_x: hbar / m * w.im,
            u_x: hbar / m * w.re,
            q_amplitude,
            q_density,
            p1,
            p2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{talbot_length, GratingConfig, PhysicalParams};
    use crate::wavefield::{NSlitWave, PlaneWave};
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_closed_forms() {
        // z = 0 single slit: R = exp(-x²/(4σ²)) with σ = b/√2
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let w = NSlitWave::new(&p, &g);
        let sigma = 25e-9 / 2f64.sqrt();
        let (hbar, m) = (p.hbar(), p.mass());
        let at0 = LocalHydro::at(&w, 0.0, 0.0).unwrap();
        let q0 = hbar * hbar / (4.0 * m * sigma * sigma);
        assert_relative_eq!(at0.q_amplitude, q0, max_relative = 1e-12);
        assert_relative_eq!(at0.q_density, q0, max_relative = 1e-12);
        let root = LocalHydro::at(&w, sigma * 2f64.sqrt(), 0.0).unwrap();
        assert!(root.q_amplitude.abs() < 1e-12 * q0);
        let at_sigma = LocalHydro::at(&w, sigma, 0.0).unwrap();
        assert_relative_eq!(
            at_sigma.u_x,
            -hbar / m * sigma / (2.0 * sigma * sigma),
            max_relative = 1e-12
        );
        assert_eq!(at_sigma.v_x, 0.0);
        assert_relative_eq!(
            (at_sigma.p1 + at_sigma.p2) / at_sigma.rho,
            at_sigma.q_density,
            max_relative = 1e-12
        );
    }

    #[test]
    fn plane_wave_is_force_free() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let kappa = 3e7;
        let h = LocalHydro::at(&PlaneWave::new(&p, kappa), 1.3e-7, 0.0).unwrap();
        assert_relative_eq!(h.v_x, p.hbar() * kappa / p.mass(), max_relative = 1e-14);
        let scale = p.hbar() * p.hbar() * kappa * kappa / p.mass();
        assert!(h.q_amplitude.abs() < 1e-14 * scale);
        assert!(h.q_density.abs() < 1e-14 * scale);
        assert!(h.u_x.abs() < 1e-14 * p.hbar() * kappa / p.mass());
    }

    #[test]
    fn forms_agree_on_carpet_points() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let w = NSlitWave::new(&p, &g);
        let z_t = talbot_length(250e-9, 5e-12).unwrap();
        for k in 0..200 {
            let x = -1.1e-6 + 1.1e-8 * k as f64;
            let h = LocalHydro::at(&w, x, 0.25 * z_t).unwrap();
            let rel =
                (h.q_amplitude - h.q_density).abs() / h.q_amplitude.abs().max(h.q_density.abs());
            assert!(rel < 1e-8, "x={x:e} rel={rel:e}");
        }
    }

    #[test]
    fn guard_reports_location() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let err = LocalHydro::at(&NSlitWave::new(&p, &g), 1e-5, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularPoint { x, .. } if x == 1e-5));
    }
}
