//! Zero-mean fluctuating kinematic viscosity `ν(t) = (ħ/2m) g(t)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// JSON form: `{"waveform": "sin", "omega_rad_s": ..., "phase_rad": ...}` or
/// `{"waveform": "multimode", "omega_rad_s": ..., "modes": 4, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityConfig {
    pub waveform: String,
    pub omega_rad_s: f64,
    #[serde(default)]
    pub phase_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    amplitude: f64,
    harmonic: u32,
    phase: f64,
}

/// Dimensionless oscillation `g(t)`. Every mode is a harmonic of `omega`, so `g`
/// averages to zero over any whole number of base periods.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    omega: f64,
    modes: Vec<Mode>,
}

impl Waveform {
    pub fn sine(omega: f64, phase: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(Self {
            omega,
            modes: vec![Mode {
                amplitude: 1.0,
                harmonic: 1,
                phase,
            }],
        })
    }

    /// Sum of `n_modes` harmonics with seeded random weights and phases, normalized so
    /// that the mean square equals that of a unit sine (1/2).
    pub fn multimode(omega: f64, n_modes: usize, seed: u64) -> Result<Self> {
        check_omega(omega)?;
        if n_modes == 0 {
            return Err(Error::config("multimode waveform needs at least one mode"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes: Vec<Mode> = (1..=n_modes as u32)
            .map(|harmonic| Mode {
                amplitude: rng.random_range(0.5..1.0),
                harmonic,
                phase: rng.random_range(0.0..2.0 * PI),
            })
            .collect();
        let norm = modes
            .iter()
            .map(|m| m.amplitude * m.amplitude)
            .sum::<f64>()
            .sqrt();
        for m in &mut modes {
            m.amplitude /= norm;
        }
        Ok(Self { omega, modes })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * (m.harmonic as f64 * self.omega * t + m.phase).sin())
            .sum()
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "angular frequency must be positive, got {omega:e}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityModel {
    amplitude: f64,
    g: Waveform,
}

impl ViscosityModel {
    /// Amplitude fixed to the diffusion coefficient ħ/2m.
    pub fn new(params: &PhysicalParams, g: Waveform) -> Self {
        Self {
            amplitude: params.diffusion_coefficient(),
            g,
        }
    }

    pub fn from_config(params: &PhysicalParams, cfg: &ViscosityConfig) -> Result<Self> {
        let g = match cfg.waveform.as_str() {
            "sin" => {
                if cfg.modes.is_some() || cfg.seed.is_some() {
                    return Err(Error::config(
                        "'modes' and 'seed' apply only to the multimode waveform",
                    ));
                }
                Waveform::sine(cfg.omega_rad_s, cfg.phase_rad)?
            }
            "multimode" => Waveform::multimode(
                cfg.omega_rad_s,
                cfg.modes.unwrap_or(4),
                cfg.seed.unwrap_or(0),
            )?,
            other => {
                return Err(Error::config(format!(
                    "unknown viscosity waveform '{other}'"
                )))
            }
        };
        Ok(Self::new(params, g))
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn waveform(&self) -> &Waveform {
        &self.g
    }

    /// Sample mean and variance of ν over `periods` whole base periods, `samples_per_period`
    /// uniform samples each (right endpoint excluded).
    pub fn sample_statistics(&self, periods: usize, samples_per_period: usize) -> (f64, f64) {
        let n = periods * samples_per_period;
        let dt = self.g.period() / samples_per_period as f64;
        let values: Vec<f64> = (0..n)
            .map(|k| self.amplitude * self.g.eval(k as f64 * dt))
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var)
    }
}

/// `ν(t) = amplitude · g(t)`.
pub fn sample_viscosity(model: &ViscosityModel, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "time must be non-negative, got {t:e}"
        )));
    }
    Ok(model.amplitude * model.g.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> PhysicalParams {
        PhysicalParams::new(5e-12, 100.0).unwrap()
    }

    #[test]
    fn sine_starts_at_zero() {
        let m = ViscosityModel::new(&params(), Waveform::sine(2.0e3, 0.0).unwrap());
        assert_eq!(sample_viscosity(&m, 0.0).unwrap(), 0.0);
        assert_relative_eq!(m.amplitude(), HBAR_OVER_2M, max_relative = 1e-12);
        assert!(sample_viscosity(&m, -1.0).is_err());
    }

    const HBAR_OVER_2M: f64 = 1.054_571_817e-34 / (2.0 * 1.325_214_03e-24);

    #[test]
    fn one_period_mean_and_variance() {
        let m = ViscosityModel::new(&params(), Waveform::sine(7.0, 0.3).unwrap());
        let (mean, var) = m.sample_statistics(1, 4096);
        let a = m.amplitude();
        assert!(mean.abs() < 1e-12 * a);
        assert_relative_eq!(var, a * a / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn multimode_is_zero_mean_and_deterministic() {
        let p = params();
        let cfg = ViscosityConfig {
            waveform: "multimode".into(),
            omega_rad_s: 3.0,
            phase_rad: 0.0,
            modes: Some(5),
            seed: Some(11),
        };
        let a = ViscosityModel::from_config(&p, &cfg).unwrap();
        let b = ViscosityModel::from_config(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let (mean, var) = a.sample_statistics(3, 2048);
        assert!(mean.abs() < 1e-10 * a.amplitude());
        assert_relative_eq!(var, a.amplitude().powi(2) / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn unknown_waveform_is_config_error() {
        let cfg = ViscosityConfig {
            waveform: "square".into(),
            omega_rad_s: 1.0,
            phase_rad: 0.0,
            modes: None,
            seed: None,
        };
        assert!(matches!(
            ViscosityModel::from_config(&params(), &cfg),
            Err(Error::Config(_))
        ));
        let neg = ViscosityConfig {
            waveform: "sin".into(),
            omega_rad_s: -1.0,
            ..cfg
        };
        assert!(ViscosityModel::from_config(&params(), &neg).is_err());
    }
}
