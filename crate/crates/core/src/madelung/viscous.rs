//! Phase factor that absorbs the fluctuating-viscosity term into the wave function.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::viscosity::ViscosityModel;

/// `exp{-(i/2) ∫₀ᵗ g(τ) f(τ) dτ}` by the trapezoid rule, with `f_samples` taken
/// uniformly on `[0, t]`.
pub fn phase_correction(f_samples: &[f64], model: &ViscosityModel, t: f64) -> Result<Complex64> {
    if f_samples.is_empty() {
        return Err(Error::domain(
            "phase correction needs at least one f(ρ) sample",
        ));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "time must be non-negative, got {t:e}"
        )));
    }
    let n = f_samples.len();
    if n == 1 {
        if t != 0.0 {
            return Err(Error::domain("a single sample only spans t = 0"));
        }
        return Ok(Complex64::new(1.0, 0.0));
    }
    let g = model.waveform();
    let dt = t / (n - 1) as f64;
    let integrand = |k: usize| g.eval(k as f64 * dt) * f_samples[k];
    let interior: f64 = (1..n - 1).map(integrand).sum();
    let integral = dt * (0.5 * (integrand(0) + integrand(n - 1)) + interior);
    Ok(Complex64::from_polar(1.0, -0.5 * integral))
}

/// `f = d ln ρ / dt` along a path sampled at increasing `z`, with `t = z / v_z`.
/// Centered differences inside, one-sided at the ends.
pub fn log_density_rate(z: &[f64], rho: &[f64], params: &PhysicalParams) -> Result<Vec<f64>> {
    if z.len() != rho.len() {
        return Err(Error::domain("z and rho samples differ in length"));
    }
    if z.len() < 2 {
        return Err(Error::InsufficientData {
            what: "log-density rate samples",
            needed: 2,
            got: z.len(),
        });
    }
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::domain("density must be positive along the path"));
    }
    let ln: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let t: Vec<f64> = z.iter().map(|z| params.time_of_flight(*z)).collect();
    let n = z.len();
    Ok((0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (ln[b] - ln[a]) / (t[b] - t[a])
        })
        .collect())
}
