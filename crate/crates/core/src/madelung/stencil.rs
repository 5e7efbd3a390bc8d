//! Centered second-order stencils along x. A node is NaN when the stencil touches a
//! boundary, a NaN neighbour, or a non-positive amplitude/density.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::params::{GridSpec, PhysicalParams};

fn map_x_stencil<F>(values: &Array2<f64>, f: F) -> Array2<f64>
where
    F: Fn(f64, f64, f64) -> Option<f64>,
{
    let (nx, nz) = values.dim();
    let mut out = Array2::from_elem((nx, nz), f64::NAN);
    for i in 1..nx.saturating_sub(1) {
        for j in 0..nz {
            let (a, c, b) = (values[[i - 1, j]], values[[i, j]], values[[i + 1, j]]);
            if a.is_finite() && c.is_finite() && b.is_finite() {
                if let Some(v) = f(a, c, b) {
                    out[[i, j]] = v;
                }
            }
        }
    }
    out
}

/// `Q = -(ħ²/2m) ∇²R / R`.
pub fn quantum_potential_from_amplitude(
    amplitude: &Array2<f64>,
    grid: &GridSpec,
    params: &PhysicalParams,
) -> Array2<f64> {
    let h2 = grid.dx() * grid.dx();
    let k = params.hbar() * params.hbar() / (2.0 * params.mass());
    map_x_stencil(amplitude, |a, c, b| {
        (c > 0.0).then(|| -k * (a - 2.0 * c + b) / (h2 * c))
    })
}

/// `Q = (ħ²/8m)(∇ρ/ρ)² - (ħ²/4m) ∇²ρ / ρ`.
pub fn quantum_potential_from_density(
    rho: &Array2<f64>,
    grid: &GridSpec,
    params: &PhysicalParams,
) -> Array2<f64> {
    let h = grid.dx();
    let hb2m = params.hbar() * params.hbar() / params.mass();
    map_x_stencil(rho, |a, c, b| {
        (c > 0.0).then(|| {
            let g = (b - a) / (2.0 * h) / c;
            let l = (a - 2.0 * c + b) / (h * h) / c;
            hb2m / 8.0 * g * g - hb2m / 4.0 * l
        })
    })
}

/// Pressures built on the mass density `ρ_M = m ρ`:
/// `P1 = -(ħ²/4m²) ∇²ρ_M`, `P2 = (ħ²/8m²) (∇ρ_M)² / ρ_M`.
pub fn pressures(
    rho: &Array2<f64>,
    grid: &GridSpec,
    params: &PhysicalParams,
) -> (Array2<f64>, Array2<f64>) {
    let h = grid.dx();
    let m = params.mass();
    let c = params.hbar() * params.hbar() / (m * m);
    let rho_m = rho.mapv(|r| m * r);
    let p1 = map_x_stencil(&rho_m, |a, mid, b| {
        (mid > 0.0).then(|| -c / 4.0 * (a - 2.0 * mid + b) / (h * h))
    });
    let p2 = map_x_stencil(&rho_m, |a, mid, b| {
        (mid > 0.0).then(|| {
            let g = (b - a) / (2.0 * h);
            c / 8.0 * g * g / mid
        })
    });
    (p1, p2)
}

/// Wraps a phase difference into `(-π, π]`.
pub fn wrap_phase(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// `v = (1/m) ∂S/∂x`. The centered difference is the sum of the two one-sided
/// differences, each taken modulo `2πħ`, so unwrapping offsets cancel and phase steps
/// up to π per node are resolved.
pub fn current_velocity(
    action: &Array2<f64>,
    grid: &GridSpec,
    params: &PhysicalParams,
) -> Array2<f64> {
    let h = grid.dx();
    let hbar = params.hbar();
    let m = params.mass();
    map_x_stencil(action, |a, c, b| {
        let d = wrap_phase((b - c) / hbar) + wrap_phase((c - a) / hbar);
        Some(hbar * d / (2.0 * h * m))
    })
}

/// `u = (ħ/m) ∂ ln R / ∂x`.
pub fn osmotic_velocity(
    amplitude: &Array2<f64>,
    grid: &GridSpec,
    params: &PhysicalParams,
) -> Array2<f64> {
    let h = grid.dx();
    let k = params.hbar() / params.mass();
    map_x_stencil(amplitude, |a, c, b| {
        (a > 0.0 && c > 0.0 && b > 0.0).then(|| k * (b.ln() - a.ln()) / (2.0 * h))
    })
}
