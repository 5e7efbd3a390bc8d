//! Bohmian trajectories through the analytic current-velocity field.
//!
//! Propagation distance is the integration variable, `dx/dz = v_x / v_z`, which is the
//! increment `x(t + δt) = x(t) + v δt` with `δt = dz / v_z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::madelung::LocalHydro;
use crate::params::{talbot_length, GratingConfig, PhysicalParams};
use crate::wavefield::{NSlitWave, WaveSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    /// Evenly spaced over `[-(N-1)d/2 - 2b, (N-1)d/2 + 2b]`.
    UniformAcrossSlits,
    /// Quantiles of each slit's Gaussian amplitude profile.
    PerSlitGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub seeding: Seeding,
    #[serde(rename = "z_start_m")]
    pub z_start: f64,
    #[serde(rename = "z_end_m")]
    pub z_end: f64,
    pub integrator: Integrator,
    #[serde(rename = "dz_m")]
    pub dz: f64,
    /// Keep every n-th step; the first and last points are always kept.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    10
}

impl EnsembleConfig {
    /// 100 uniform seeds, RK4 with `dz = z_T / 2000` out to `6 z_T`.
    pub fn standard(params: &PhysicalParams, grating: &GratingConfig) -> Result<Self> {
        let z_t = talbot_length(grating.pitch(), params.lambda())?;
        Ok(Self {
            n_trajectories: 100,
            seeding: Seeding::UniformAcrossSlits,
            z_start: 0.0,
            z_end: 6.0 * z_t,
            integrator: Integrator::Rk4,
            dz: z_t / 2000.0,
            record_every: default_record_every(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::config("ensemble needs at least one trajectory"));
        }
        if !(self.z_start >= 0.0 && self.z_end > self.z_start && self.z_end.is_finite()) {
            return Err(Error::config("ensemble needs z_end > z_start >= 0"));
        }
        if !(self.dz > 0.0 && self.dz.is_finite()) {
            return Err(Error::config("ensemble step dz must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        Ok(())
    }

    /// The z values of every integration node: uniform steps, the last one shortened to
    /// land on `z_end`.
    pub fn z_nodes(&self) -> Vec<f64> {
        let span = self.z_end - self.z_start;
        let n = ((span / self.dz) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let mut z: Vec<f64> = (0..n).map(|k| self.z_start + k as f64 * self.dz).collect();
        z.push(self.z_end);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub z: f64,
    pub x: f64,
    pub v_x: f64,
    pub rho: f64,
    /// Quantum potential at the point (J).
    pub q: f64,
    /// `(ħ/m)(∂x R / R)²` (1/s).
    pub omega_q: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub id: usize,
    pub seed_x0: f64,
    pub points: Vec<TrajectoryPoint>,
    /// Set when integration stopped early; `points` then ends before `z_end`.
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Current and osmotic velocity `(Re 𝒰, -Im 𝒰)` with `𝒰 = -i(ħ/m) ∇Ψ/Ψ`.
pub fn complex_velocity(
    x: f64,
    z: f64,
    params: &PhysicalParams,
    grating: &GratingConfig,
) -> Result<(f64, f64)> {
    if !(z >= 0.0) {
        return Err(Error::domain(format!("z must be non-negative, got {z:e}")));
    }
    complex_velocity_of(&NSlitWave::new(params, grating), x, z)
}

pub fn complex_velocity_of<S: WaveSource>(source: &S, x: f64, z: f64) -> Result<(f64, f64)> {
    let h = LocalHydro::at(source, x, z)?;
    Ok((h.v_x, h.u_x))
}

pub fn diagnose<S: WaveSource>(source: &S, x: f64, z: f64) -> Result<TrajectoryPoint> {
    let h = LocalHydro::at(source, x, z)?;
    let p = source.params();
    let r = h.u_x * p.mass() / p.hbar();
    Ok(TrajectoryPoint {
        z,
        x,
        v_x: h.v_x,
        rho: h.rho,
        q: h.q_amplitude,
        omega_q: p.hbar() / p.mass() * r * r,
    })
}

fn slope<S: WaveSource>(source: &S, x: f64, z: f64) -> Result<f64> {
    let jet = source.jet(x, z);
    let rho = jet.density();
    if !(rho >= crate::madelung::DENSITY_GUARD) {
        return Err(Error::SingularPoint { x, z, rho });
    }
    let p = source.params();
    Ok(p.hbar() / p.mass() * jet.log_derivative().im / p.v_z())
}

/// Advances one step of length `dz` and re-evaluates the diagnostics at the new point.
pub fn step<S: WaveSource>(
    point: &TrajectoryPoint,
    dz: f64,
    integrator: Integrator,
    source: &S,
) -> Result<TrajectoryPoint> {
    if !(dz > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {dz:e}")));
    }
    let (x, z) = (point.x, point.z);
    let x_new = match integrator {
        Integrator::Euler => x + dz * point.v_x / source.params().v_z(),
        Integrator::Rk4 => {
            let half = 0.5 * dz;
            let k1 = slope(source, x, z)?;
            let k2 = slope(source, x + half * k1, z + half)?;
            let k3 = slope(source, x + half * k2, z + half)?;
            let k4 = slope(source, x + dz * k3, z + dz)?;
            x + dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
    };
    diagnose(source, x_new, z + dz)
}

pub fn integrate_trajectory<S: WaveSource>(
    id: usize,
    x0: f64,
    config: &EnsembleConfig,
    source: &S,
) -> Trajectory {
    let nodes = config.z_nodes();
    let mut points = Vec::with_capacity(nodes.len() / config.record_every + 2);
    let wrap = |z: f64, e: Error| Error::Trajectory {
        id,
        z,
        source: Box::new(e),
    };
    let mut current = match diagnose(source, x0, nodes[0]) {
        Ok(p) => p,
        Err(e) => {
            return Trajectory {
                id,
                seed_x0: x0,
                points,
                failure: Some(wrap(nodes[0], e)),
            }
        }
    };
    points.push(current);
    let last = nodes.len() - 1;
    for k in 1..nodes.len() {
        let dz = nodes[k] - nodes[k - 1];
        match step(&current, dz, config.integrator, source) {
            Ok(mut next) => {
                // pin z to the shared node sequence
                next.z = nodes[k];
                current = next;
                if k % config.record_every == 0 || k == last {
                    points.push(current);
                }
            }
            Err(e) => {
                return Trajectory {
                    id,
                    seed_x0: x0,
                    points,
                    failure: Some(wrap(current.z, e)),
                }
            }
        }
    }
    Trajectory {
        id,
        seed_x0: x0,
        points,
        failure: None,
    }
}

/// Initial positions, sorted ascending.
pub fn seed_positions(config: &EnsembleConfig, grating: &GratingConfig) -> Vec<f64> {
    let n = config.n_trajectories;
    let b = grating.slit_width();
    match config.seeding {
        Seeding::UniformAcrossSlits => {
            let half = grating.half_extent() + 2.0 * b;
            if n == 1 {
                return vec![0.0];
            }
            (0..n)
                .map(|k| ((n - 1 - k) as f64 * -half + k as f64 * half) / (n - 1) as f64)
                .collect()
        }
        Seeding::PerSlitGaussian => {
            let slits = grating.n_slits();
            let base = n / slits;
            let extra = n % slits;
            // extra seeds go to the slits nearest the axis first
            let mut by_distance: Vec<usize> = (0..slits).collect();
            by_distance.sort_by(|&a, &c| {
                grating
                    .slit_center(a)
                    .abs()
                    .total_cmp(&grating.slit_center(c).abs())
                    .then(a.cmp(&c))
            });
            let mut counts = vec![base; slits];
            for &s in by_distance.iter().take(extra) {
                counts[s] += 1;
            }
            let mut seeds = Vec::with_capacity(n);
            for (s, &count) in counts.iter().enumerate() {
                let c = grating.slit_center(s);
                for q in 0..count {
                    let p = (q as f64 + 0.5) / count as f64;
                    // amplitude exp(-x²/2b²) as a normal profile of width b
                    seeds.push(c + b * std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0));
                }
            }
            seeds.sort_by(f64::total_cmp);
            seeds
        }
    }
}

pub fn integrate_ensemble_of<S: WaveSource>(
    config: &EnsembleConfig,
    grating: &GratingConfig,
    source: &S,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    integrate_seeds_of(config, &seed_positions(config, grating), source)
}

/// Integrates explicit seeds, ids in the given order. `n_trajectories` and `seeding`
/// of the config are ignored.
pub fn integrate_seeds_of<S: WaveSource>(
    config: &EnsembleConfig,
    seeds: &[f64],
    source: &S,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::config("no seeds to integrate"));
    }
    let trajectories: Vec<Trajectory> = seeds
        .par_iter()
        .enumerate()
        .map(|(id, &x0)| integrate_trajectory(id, x0, config, source))
        .collect();
    if trajectories.iter().all(|t| !t.completed()) {
        return Err(Error::Ensemble(format!(
            "all {} trajectories hit singular points",
            trajectories.len()
        )));
    }
    Ok(trajectories)
}

/// Integrates every seed of the ensemble through the N-slit field. Failures are kept
/// per trajectory; the call fails only when no trajectory completes.
pub fn integrate_ensemble(
    config: &EnsembleConfig,
    params: &PhysicalParams,
    grating: &GratingConfig,
) -> Result<Vec<Trajectory>> {
    integrate_ensemble_of(config, grating, &NSlitWave::new(params, grating))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub lower: usize,
    pub upper: usize,
    pub z: f64,
}

/// Pairs of seed-adjacent trajectories whose order is not strictly preserved at a
/// shared sample. Trajectories must be given in seed order.
pub fn find_crossings(trajectories: &[Trajectory]) -> Vec<Crossing> {
    let mut out = Vec::new();
    for pair in trajectories.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for (pa, pb) in a.points.iter().zip(&b.points) {
            if !(pa.x < pb.x) {
                out.push(Crossing {
                    lower: a.id,
                    upper: b.id,
                    z: pa.z,
                });
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::PlaneWave;

    fn setup() -> (PhysicalParams, GratingConfig) {
        (
            PhysicalParams::new(5e-12, 100.0).unwrap(),
            GratingConfig::new(9, 25e-9, 250e-9).unwrap(),
        )
    }

    #[test]
    fn single_slit_velocities_at_grating() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let b = g.slit_width();
        let (v, u) = complex_velocity(b, 0.0, &p, &g).unwrap();
        assert_eq!(v, 0.0);
        // |Ψ| = exp(-x²/2b²) at the grating, so ∂x ln R = -x/b²
        let expected = -p.hbar() / (p.mass() * b);
        assert!((u - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn axis_velocity_is_zero() {
        let (p, g) = setup();
        for &z in &[0.0, 0.01, 0.1] {
            let (v, _) = complex_velocity(0.0, z, &p, &g).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn zero_slope_keeps_position() {
        let p = PhysicalParams::new(5e-12, 100.0).unwrap();
        let w = PlaneWave::new(&p, 0.0);
        let start = diagnose(&w, 1e-7, 0.0).unwrap();
        for integ in [Integrator::Euler, Integrator::Rk4] {
            assert_eq!(step(&start, 1e-4, integ, &w).unwrap().x, 1e-7);
        }
    }

    #[test]
    fn euler_halving_is_first_order() {
        let (p, g) = setup();
        let w = NSlitWave::new(&p, &g);
        let start = diagnose(&w, 31e-9, 1e-3).unwrap();
        let dz = 2e-5;
        let full = step(&start, dz, Integrator::Euler, &w).unwrap();
        let mid = step(&start, dz / 2.0, Integrator::Euler, &w).unwrap();
        let two = step(&mid, dz / 2.0, Integrator::Euler, &w).unwrap();
        let quarter = step(&start, dz / 4.0, Integrator::Euler, &w).unwrap();
        let q2 = step(&quarter, dz / 4.0, Integrator::Euler, &w).unwrap();
        let half_full = step(&start, dz / 2.0, Integrator::Euler, &w).unwrap();
        let e1 = (full.x - two.x).abs();
        let e2 = (half_full.x - q2.x).abs();
        // local one-step discrepancy is O(dz²)
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn z_nodes_land_on_end() {
        let cfg = EnsembleConfig {
            n_trajectories: 1,
            seeding: Seeding::UniformAcrossSlits,
            z_start: 0.0,
            z_end: 1.0,
            integrator: Integrator::Rk4,
            dz: 0.3,
            record_every: 1,
        };
        let z = cfg.z_nodes();
        assert_eq!(z.len(), 5);
        assert_eq!(*z.last().unwrap(), 1.0);
        let exact = EnsembleConfig { dz: 0.25, ..cfg };
        assert_eq!(exact.z_nodes().len(), 5);
    }

    #[test]
    fn seeding_rules() {
        let (p, g) = setup();
        let mut cfg = EnsembleConfig::standard(&p, &g).unwrap();
        let s = seed_positions(&cfg, &g);
        assert_eq!(s.len(), 100);
        assert_eq!(s[0], -(g.half_extent() + 2.0 * g.slit_width()));
        assert_eq!(s[99], -s[0]);
        cfg.seeding = Seeding::PerSlitGaussian;
        cfg.n_trajectories = 27;
        let s = seed_positions(&cfg, &g);
        assert_eq!(s.len(), 27);
        // three per slit, the middle one on the center
        for (k, c) in g.slit_centers().iter().enumerate() {
            assert!((s[3 * k + 1] - c).abs() < 1e-20);
            assert!((s[3 * k] - c + g.slit_width() * 0.967_421_566).abs() < 1e-3 * g.slit_width());
        }
        cfg.n_trajectories = 1;
        cfg.seeding = Seeding::UniformAcrossSlits;
        assert_eq!(seed_positions(&cfg, &g), vec![0.0]);
    }

    #[test]
    fn invalid_config_rejected() {
        let (p, g) = setup();
        let mut cfg = EnsembleConfig::standard(&p, &g).unwrap();
        cfg.dz = 0.0;
        assert!(integrate_ensemble(&cfg, &p, &g).is_err());
        cfg.dz = 1e-4;
        cfg.z_end = cfg.z_start;
        assert!(cfg.validate().is_err());
        cfg.z_end = 1.0;
        cfg.n_trajectories = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn all_singular_is_an_error() {
        let (p, g) = setup();
        let mut cfg = EnsembleConfig::standard(&p, &g).unwrap();
        cfg.n_trajectories = 1;
        cfg.z_end = 1e-3;
        cfg.dz = 1e-4;
        // a point far outside the grating underflows to zero density
        let far = integrate_trajectory(0, 1e-4, &cfg, &NSlitWave::new(&p, &g));
        assert!(matches!(far.failure, Some(Error::Trajectory { id: 0, .. })));
        assert!(far.points.is_empty());
    }
}
