//! Hydrodynamic decomposition `Ψ = √ρ exp(iS/ħ)` of a sampled field.
//!
//! Gridded quantities use the centered stencils in [`stencil`], computed along x only
//! (the paraxial transverse form); [`local`] evaluates the same quantities pointwise
//! from the analytic derivatives of a [`WaveSource`](crate::wavefield::WaveSource).

pub mod local;
pub mod residual;
pub mod stencil;
pub mod viscous;

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::params::{GridSpec, PhysicalParams};
use crate::wavefield::ComplexField;

pub use local::{LocalHydro, DENSITY_GUARD};
pub use residual::{continuity_residual, hj_residual, HjResidual};
pub use stencil::{
    current_velocity, osmotic_velocity, pressures, quantum_potential_from_amplitude,
    quantum_potential_from_density,
};
pub use viscous::{log_density_rate, phase_correction};

/// Default relative density threshold below which nodes are masked.
pub const DEFAULT_EPS_RHO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MadelungFields {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub eps_rho: f64,
    /// `|Ψ|²` at every node.
    pub rho: Array2<f64>,
    /// `√ρ` at every node.
    pub amplitude: Array2<f64>,
    /// Unwrapped `arg Ψ` (rad); NaN where the density is below threshold.
    pub phase: Array2<f64>,
    /// `S = ħ · phase` (J·s).
    pub action: Array2<f64>,
    pub v_x: Array2<f64>,
    pub u_x: Array2<f64>,
    /// Quantum potential from the amplitude form (J).
    pub q: Array2<f64>,
    pub p1: Array2<f64>,
    pub p2: Array2<f64>,
    /// `ρ ≥ eps_rho · max ρ`.
    pub density_valid: Array2<bool>,
    /// Nodes where every x-stencil is defined: density valid at the node and both
    /// x-neighbours, and not on the x-boundary.
    pub mask: Array2<bool>,
}

impl MadelungFields {
    pub fn rho_max(&self) -> f64 {
        self.rho.iter().fold(0.0, |m: f64, &r| m.max(r))
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Splits a field into density, unwrapped action, velocities, quantum potential and
/// pressures.
pub fn decompose(field: &ComplexField, eps_rho: f64) -> Result<MadelungFields> {
    if !(eps_rho > 0.0 && eps_rho < 1.0) {
        return Err(Error::domain(format!(
            "eps_rho must lie in (0, 1), got {eps_rho:e}"
        )));
    }
    let grid = field.grid;
    let params = field.params;
    let (nx, nz) = field.values.dim();
    if (nx, nz) != (grid.nx, grid.nz) {
        return Err(Error::domain("field values do not match the grid shape"));
    }

    let rho = field.density();
    let rho_max = rho.iter().fold(0.0f64, |m, &r| m.max(r));
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return Err(Error::DegenerateInput(
            "field density is zero everywhere".into(),
        ));
    }
    let threshold = eps_rho * rho_max;
    let density_valid = rho.mapv(|r| r >= threshold);

    let phase = unwrap_phase(field, &density_valid);
    let hbar = params.hbar();
    let action = phase.mapv(|p| hbar * p);
    let amplitude = rho.mapv(f64::sqrt);

    let masked = |a: &Array2<f64>| {
        let mut out = a.clone();
        out.zip_mut_with(&density_valid, |v, ok| {
            if !ok {
                *v = f64::NAN;
            }
        });
        out
    };
    let amp_m = masked(&amplitude);
    let rho_m = masked(&rho);

    let mut mask = Array2::from_elem((nx, nz), false);
    for i in 1..nx.saturating_sub(1) {
        for j in 0..nz {
            mask[[i, j]] =
                density_valid[[i - 1, j]] && density_valid[[i, j]] && density_valid[[i + 1, j]];
        }
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::DegenerateInput(
            "no node has a resolvable density neighbourhood".into(),
        ));
    }

    let v_x = current_velocity(&action, &grid, &params);
    let u_x = osmotic_velocity(&amp_m, &grid, &params);
    let q = quantum_potential_from_amplitude(&amp_m, &grid, &params);
    let (p1, p2) = pressures(&rho_m, &grid, &params);

    let apply = |mut a: Array2<f64>| {
        a.zip_mut_with(&mask, |v, ok| {
            if !ok {
                *v = f64::NAN;
            }
        });
        a
    };

    Ok(MadelungFields {
        grid,
        params,
        eps_rho,
        rho,
        amplitude,
        phase,
        action,
        v_x: apply(v_x),
        u_x: apply(u_x),
        q: apply(q),
        p1: apply(p1),
        p2: apply(p2),
        density_valid,
        mask,
    })
}

/// Unwraps `arg Ψ` along each x-line outward from the axis column, then shifts whole
/// lines by multiples of 2π so that the axis column is continuous in z. Invalid nodes
/// are NaN; across a masked gap the unwrap continues from the last valid node.
pub fn unwrap_phase(field: &ComplexField, valid: &Array2<bool>) -> Array2<f64> {
    let grid = &field.grid;
    let (nx, nz) = field.values.dim();
    let i0 = grid.axis_index();
    let mut out = Array2::from_elem((nx, nz), f64::NAN);
    let follow = |raw: f64, last: Option<f64>| match last {
        Some(l) => raw + 2.0 * PI * ((l - raw) / (2.0 * PI)).round(),
        None => raw,
    };
    for j in 0..nz {
        let raw = |i: usize| field.values[[i, j]].arg();
        let start = valid[[i0, j]].then(|| raw(i0));
        if let Some(s) = start {
            out[[i0, j]] = s;
        }
        let mut last = start;
        for i in i0 + 1..nx {
            if valid[[i, j]] {
                let v = follow(raw(i), last);
                out[[i, j]] = v;
                last = Some(v);
            }
        }
        let mut last = start;
        for i in (0..i0).rev() {
            if valid[[i, j]] {
                let v = follow(raw(i), last);
                out[[i, j]] = v;
                last = Some(v);
            }
        }
    }
    // stitch slices along the axis column
    let mut reference: Option<f64> = None;
    for j in 0..nz {
        let here = out[[i0, j]];
        if !here.is_finite() {
            continue;
        }
        if let Some(r) = reference {
            let shift = 2.0 * PI * ((r - here) / (2.0 * PI)).round();
            if shift != 0.0 {
                for i in 0..nx {
                    out[[i, j]] += shift;
                }
            }
        }
        reference = Some(out[[i0, j]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{talbot_length, GratingConfig};
    use crate::wavefield::{evaluate_field, NSlitWave, PlaneWave, WaveSource};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn params() -> PhysicalParams {
        PhysicalParams::new(5e-12, 100.0).unwrap()
    }

    #[test]
    fn plane_phase_unwraps_to_linear_action() {
        let p = params();
        let kappa = 2.0e8;
        let grid = GridSpec::new(-200e-9, 200e-9, 401, 0.0, 1e-3, 3).unwrap();
        let field = ComplexField::sample(&PlaneWave::new(&p, kappa), &grid).unwrap();
        let f = decompose(&field, DEFAULT_EPS_RHO).unwrap();
        for j in 0..3 {
            for i in 0..grid.nx {
                let x = grid.x(i);
                assert_relative_eq!(f.rho[[i, j]], 1.0, max_relative = 1e-14);
                assert!((f.action[[i, j]] - p.hbar() * kappa * x).abs() < 1e-10 * p.hbar());
            }
            for i in 1..grid.nx - 1 {
                assert_relative_eq!(
                    f.v_x[[i, j]],
                    p.hbar() * kappa / p.mass(),
                    max_relative = 1e-8
                );
                assert!(f.q[[i, j]].abs() < 1e-12 * p.hbar() * p.hbar() * kappa * kappa / p.mass());
                assert!(f.u_x[[i, j]].abs() < 1e-12 * p.hbar() * kappa / p.mass());
            }
            assert!(!f.mask[[0, j]] && !f.mask[[grid.nx - 1, j]]);
        }
    }

    #[test]
    fn real_gaussian_has_zero_action() {
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let grid = GridSpec::new(-100e-9, 100e-9, 201, 0.0, 0.0, 1).unwrap();
        let f = decompose(&evaluate_field(&grid, &p, &g).unwrap(), DEFAULT_EPS_RHO).unwrap();
        for i in 0..grid.nx {
            let x = grid.x(i) / 25e-9;
            assert_eq!(f.action[[i, 0]], 0.0);
            assert_relative_eq!(
                f.amplitude[[i, 0]],
                (-x * x / 2.0).exp(),
                max_relative = 1e-13
            );
            let r = f.amplitude[[i, 0]];
            assert!((r * r - f.rho[[i, 0]]).abs() <= 2.0 * f64::EPSILON * f.rho[[i, 0]]);
        }
    }

    #[test]
    fn symmetric_carpet_has_zero_axis_velocity() {
        let p = params();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let grid = GridSpec::carpet(&p, &g, 6.0, 901, 61).unwrap();
        let f = decompose(&evaluate_field(&grid, &p, &g).unwrap(), DEFAULT_EPS_RHO).unwrap();
        let i0 = grid.axis_index();
        assert_eq!(grid.x(i0), 0.0);
        for j in 0..grid.nz {
            if f.mask[[i0, j]] {
                assert!(
                    f.v_x[[i0, j]].abs() < 1e-12 * p.v_z(),
                    "j={j} v={}",
                    f.v_x[[i0, j]]
                );
            }
        }
    }

    #[test]
    fn degenerate_field_rejected() {
        let p = params();
        let grid = GridSpec::new(-1e-6, 1e-6, 8, 0.0, 0.0, 1).unwrap();
        let zero = ComplexField::from_fn(&grid, &p, |_, _| Complex64::new(0.0, 0.0)).unwrap();
        assert!(matches!(
            decompose(&zero, 1e-12),
            Err(Error::DegenerateInput(_))
        ));
        let one = ComplexField::from_fn(&grid, &p, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(decompose(&one, 0.0).is_err());
        assert!(decompose(&one, 1.0).is_err());
    }

    #[test]
    fn masking_and_unwrap_invariants() {
        let p = params();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let z_t = talbot_length(250e-9, 5e-12).unwrap();
        let grid = GridSpec::new(-2.25e-6, 2.25e-6, 1200, 0.1 * z_t, 2.0 * z_t, 40).unwrap();
        let field = evaluate_field(&grid, &p, &g).unwrap();
        let f = decompose(&field, DEFAULT_EPS_RHO).unwrap();
        let threshold = f.eps_rho * f.rho_max();
        for ((idx, &m), &r) in f.mask.indexed_iter().zip(f.rho.iter()) {
            if r < threshold {
                assert!(!m, "node {idx:?} below threshold is valid");
            }
        }
        for j in 0..grid.nz {
            for i in 0..grid.nx {
                let ph = f.phase[[i, j]];
                if !ph.is_finite() {
                    continue;
                }
                let arg = field.values[[i, j]].arg();
                let rewrapped = ph - 2.0 * PI * ((ph - arg) / (2.0 * PI)).round();
                assert!((rewrapped - arg).abs() < 1e-12 * (1.0 + ph.abs()));
                if i + 1 < grid.nx && f.phase[[i + 1, j]].is_finite() {
                    assert!((f.action[[i + 1, j]] - f.action[[i, j]]).abs() < PI * p.hbar());
                }
            }
        }
    }

    #[test]
    fn stencil_velocities_match_analytic_for_gaussian() {
        // single-slit phase and log-amplitude are quadratic in x, so centered
        // differences are exact up to rounding
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let z_t = talbot_length(250e-9, 5e-12).unwrap();
        let grid = GridSpec::new(-150e-9, 150e-9, 301, 0.2 * z_t, 0.2 * z_t, 1).unwrap();
        let f = decompose(&evaluate_field(&grid, &p, &g).unwrap(), DEFAULT_EPS_RHO).unwrap();
        let wave = NSlitWave::new(&p, &g);
        let k = p.hbar() / p.mass();
        for i in 1..grid.nx - 1 {
            let w = wave.jet(grid.x(i), grid.z(0)).log_derivative();
            let (v, u) = (k * w.im, k * w.re);
            let scale = k / 25e-9;
            assert!((f.v_x[[i, 0]] - v).abs() < 1e-6 * scale, "v at {i}");
            assert!((f.u_x[[i, 0]] - u).abs() < 1e-6 * scale, "u at {i}");
        }
    }
}
