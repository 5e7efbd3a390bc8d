//! Residuals of the continuity and Hamilton-Jacobi equations on a decomposed grid,
//! with time mapped to distance by `t = z / v_z`.

use ndarray::Array2;

use super::stencil::wrap_phase;
use super::MadelungFields;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::stats::FieldStats;

fn require_slices(fields: &MadelungFields, what: &'static str) -> Result<()> {
    if fields.grid.nz < 3 {
        return Err(Error::InsufficientData {
            what,
            needed: 3,
            got: fields.grid.nz,
        });
    }
    Ok(())
}

/// `[∂ρ/∂t + ∂(ρ v_x)/∂x] / ρ` (1/s), NaN where a stencil is undefined.
pub fn continuity_residual(
    fields: &MadelungFields,
    params: &PhysicalParams,
) -> Result<Array2<f64>> {
    require_slices(fields, "continuity residual z-slices")?;
    let (nx, nz) = fields.rho.dim();
    let (dx, dz) = (fields.grid.dx(), fields.grid.dz());
    let vz = params.v_z();
    let rho = &fields.rho;
    let mut out = Array2::from_elem((nx, nz), f64::NAN);
    for i in 1..nx - 1 {
        for j in 1..nz - 1 {
            let ok = fields.mask[[i - 1, j]]
                && fields.mask[[i + 1, j]]
                && fields.density_valid[[i, j]]
                && fields.density_valid[[i, j - 1]]
                && fields.density_valid[[i, j + 1]];
            if !ok {
                continue;
            }
            let drho_dt = vz * (rho[[i, j + 1]] - rho[[i, j - 1]]) / (2.0 * dz);
            let flux_p = rho[[i + 1, j]] * fields.v_x[[i + 1, j]];
            let flux_m = rho[[i - 1, j]] * fields.v_x[[i - 1, j]];
            out[[i, j]] = (drho_dt + (flux_p - flux_m) / (2.0 * dx)) / rho[[i, j]];
        }
    }
    Ok(out)
}

/// Hamilton-Jacobi residual `∂S/∂t + (∂S/∂x)²/2m + Q`.
///
/// `transverse` holds the envelope part per node. The longitudinal action
/// `ħkz - (ħ²k²/2m) t` contributes the constant `longitudinal = ħ k v_z - ħ²k²/2m`
/// (which equals `ħ²k²/2m`) at every node; it is kept separate so that spatial
/// spreads are computed without cancellation against it.
#[derive(Debug, Clone)]
pub struct HjResidual {
    pub transverse: Array2<f64>,
    pub longitudinal: f64,
}

impl HjResidual {
    pub fn total(&self, i: usize, j: usize) -> f64 {
        self.transverse[[i, j]] + self.longitudinal
    }

    /// Mean of the full residual (the empirical integration constant) and its spatial
    /// standard deviation, over finite nodes where `keep` holds.
    pub fn constant_and_spread(&self, keep: &Array2<bool>) -> (f64, f64) {
        let s = FieldStats::of_masked(&self.transverse, keep);
        (s.mean + self.longitudinal, s.std_dev)
    }
}

pub fn hj_residual(fields: &MadelungFields, params: &PhysicalParams) -> Result<HjResidual> {
    require_slices(fields, "Hamilton-Jacobi residual z-slices")?;
    let (nx, nz) = fields.rho.dim();
    let dz = fields.grid.dz();
    let (hbar, m, vz) = (params.hbar(), params.mass(), params.v_z());
    let mut out = Array2::from_elem((nx, nz), f64::NAN);
    for i in 1..nx - 1 {
        for j in 1..nz - 1 {
            if !(fields.mask[[i, j]]
                && fields.density_valid[[i, j - 1]]
                && fields.density_valid[[i, j + 1]])
            {
                continue;
            }
            let dphi = wrap_phase(fields.phase[[i, j + 1]] - fields.phase[[i, j - 1]]);
            let ds_dt = vz * hbar * dphi / (2.0 * dz);
            let v = fields.v_x[[i, j]];
            out[[i, j]] = ds_dt + 0.5 * m * v * v + fields.q[[i, j]];
        }
    }
    let k = params.wavenumber();
    let longitudinal = hbar * k * vz - params.longitudinal_energy();
    Ok(HjResidual {
        transverse: out,
        longitudinal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::madelung::{decompose, DEFAULT_EPS_RHO};
    use crate::params::{talbot_length, GratingConfig, GridSpec};
    use crate::wavefield::{evaluate_field, ComplexField, PlaneWave};

    fn params() -> PhysicalParams {
        PhysicalParams::new(5e-12, 100.0).unwrap()
    }

    #[test]
    fn plane_wave_residuals() {
        let p = params();
        let grid = GridSpec::new(-1e-6, 1e-6, 201, 0.0, 1e-3, 5).unwrap();
        let kappa = 1e7;
        let f = decompose(
            &ComplexField::sample(&PlaneWave::new(&p, kappa), &grid).unwrap(),
            DEFAULT_EPS_RHO,
        )
        .unwrap();
        let c = continuity_residual(&f, &p).unwrap();
        // rounding floor of a centered flux difference, in units of v/dx
        let v = p.hbar() * kappa / p.mass();
        assert!(FieldStats::of(&c).max_abs * grid.dx() / v < 1e-10);
        let hj = hj_residual(&f, &p).unwrap();
        let (constant, spread) = hj.constant_and_spread(&f.mask);
        let e_k = p.longitudinal_energy();
        assert!(spread / e_k < 1e-10);
        let expected = e_k + (p.hbar() * kappa).powi(2) / (2.0 * p.mass());
        assert!((constant - expected).abs() / e_k < 1e-10);
    }

    #[test]
    fn too_few_slices() {
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let grid = GridSpec::new(-1e-7, 1e-7, 21, 0.0, 1e-3, 2).unwrap();
        let f = decompose(&evaluate_field(&grid, &p, &g).unwrap(), DEFAULT_EPS_RHO).unwrap();
        assert!(matches!(
            continuity_residual(&f, &p),
            Err(Error::InsufficientData {
                needed: 3,
                got: 2,
                ..
            })
        ));
        assert!(hj_residual(&f, &p).is_err());
    }

    #[test]
    fn single_slit_residuals_converge() {
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let z_t = talbot_length(250e-9, 5e-12).unwrap();
        let run = |nx: usize, nz: usize| {
            let grid = GridSpec::new(-5e-6, 5e-6, nx, 5.0 * z_t, 6.0 * z_t, nz).unwrap();
            let f = decompose(&evaluate_field(&grid, &p, &g).unwrap(), DEFAULT_EPS_RHO).unwrap();
            let thr = 1e-6 * f.rho_max();
            let keep = f.rho.mapv(|r| r > thr) & &f.mask;
            let c = FieldStats::of_masked(&continuity_residual(&f, &p).unwrap(), &keep).max_abs;
            let (_, s) = hj_residual(&f, &p).unwrap().constant_and_spread(&keep);
            (c * z_t / p.v_z(), s)
        };
        let (c1, s1) = run(201, 101);
        let (c2, s2) = run(401, 201);
        assert!(c2 < 1e-4, "continuity {c2:e}");
        let ratio = c1 / c2;
        assert!((3.5..=4.5).contains(&ratio), "continuity ratio {ratio}");
        let ratio = s1 / s2;
        assert!((3.5..=4.5).contains(&ratio), "HJ ratio {ratio}");
    }
}
