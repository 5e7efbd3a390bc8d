//! Complex-velocity variance, the perturbation frequency `ω_Q`, and the pairwise
//! energy-time and momentum-position products along neighbouring trajectories.
//!
//! The field carries no `e^{ikz}` factor, so the longitudinal momentum `ħk` is added
//! analytically when [`Longitudinal::Included`] is selected. It enters as the z
//! component of the velocity vector, `𝒰·𝒰 = (v_x - i u_x)² + (ħk/m)²`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::madelung::LocalHydro;
use crate::params::{GratingConfig, GridSpec, PhysicalParams};
use crate::trajectories::Trajectory;
use crate::wavefield::{NSlitWave, WaveSource};

/// Below this `|δω_Q|` a pair sample is indeterminate (1/s).
pub const INDETERMINATE_OMEGA: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Longitudinal {
    #[default]
    Included,
    Omitted,
}

impl Longitudinal {
    fn energy(self, params: &PhysicalParams) -> f64 {
        match self {
            Longitudinal::Included => params.longitudinal_energy(),
            Longitudinal::Omitted => 0.0,
        }
    }
}

/// `(m/2) 𝒰²` in J, evaluated directly from `v` and `u`.
pub fn variance_complex_velocity_of<S: WaveSource>(
    source: &S,
    x: f64,
    z: f64,
    mode: Longitudinal,
) -> Result<Complex64> {
    let h = LocalHydro::at(source, x, z)?;
    let m = source.params().mass();
    let transverse = Complex64::new(h.v_x, -h.u_x);
    Ok(0.5 * m * transverse * transverse + mode.energy(source.params()))
}

pub fn variance_complex_velocity(
    x: f64,
    z: f64,
    params: &PhysicalParams,
    grating: &GratingConfig,
    mode: Longitudinal,
) -> Result<Complex64> {
    variance_complex_velocity_of(&NSlitWave::new(params, grating), x, z, mode)
}

/// The same quantity through the operator expansion
/// `-(ħ²/2m) Ψ''/Ψ + i(ħ/2) ∂x𝒰`, with `∂x𝒰 = -i(ħ/m)(ΨΨ'' - Ψ'²)/Ψ²`.
/// Also returns the magnitude of the larger of the two terms, the scale against which
/// their cancellation is measured.
pub fn variance_operator_expansion<S: WaveSource>(
    source: &S,
    x: f64,
    z: f64,
    mode: Longitudinal,
) -> Result<(Complex64, f64)> {
    let p = source.params();
    let (hbar, m) = (p.hbar(), p.mass());
    let jet = source.jet(x, z);
    let rho = jet.density();
    if !(rho >= crate::madelung::DENSITY_GUARD) {
        return Err(Error::SingularPoint { x, z, rho });
    }
    let laplacian = -hbar * hbar / (2.0 * m) * (jet.d2psi_dx2 / jet.psi);
    let psi2 = jet.psi * jet.psi;
    let du = Complex64::new(0.0, -hbar / m)
        * ((jet.psi * jet.d2psi_dx2 - jet.dpsi_dx * jet.dpsi_dx) / psi2);
    let divergence = Complex64::new(0.0, 0.5 * hbar) * du;
    let scale = laplacian.norm().max(divergence.norm());
    Ok((laplacian + divergence + mode.energy(p), scale))
}

/// `(ħ/m)(∂x R / R)²` (1/s).
pub fn omega_q_of<S: WaveSource>(source: &S, x: f64, z: f64) -> Result<f64> {
    let jet = source.jet(x, z);
    let rho = jet.density();
    if !(rho >= crate::madelung::DENSITY_GUARD) {
        return Err(Error::SingularPoint { x, z, rho });
    }
    let p = source.params();
    let r = jet.log_derivative().re;
    Ok(p.hbar() / p.mass() * r * r)
}

pub fn omega_q(x: f64, z: f64, params: &PhysicalParams, grating: &GratingConfig) -> Result<f64> {
    omega_q_of(&NSlitWave::new(params, grating), x, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReVarRecord {
    pub x: f64,
    pub z: f64,
    /// Kinetic energy `(∇S)²/2m` (J).
    pub energy: f64,
    pub omega_q: f64,
    /// `E - (ħ/2) ω_Q` (J).
    pub re_var: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReVarScan {
    pub mode: Longitudinal,
    pub records: Vec<ReVarRecord>,
    pub violations: usize,
    /// Points skipped because the density was below the guard.
    pub singular: usize,
    /// Points where `ω_Q` came out negative or non-finite; zero for a correct build.
    pub negative_omega: usize,
}

impl ReVarScan {
    pub fn min_re_var(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.re_var)
            .fold(f64::INFINITY, f64::min)
    }
}

fn re_var_record<S: WaveSource>(
    source: &S,
    x: f64,
    z: f64,
    mode: Longitudinal,
) -> Option<ReVarRecord> {
    let h = LocalHydro::at(source, x, z).ok()?;
    let p = source.params();
    let (hbar, m) = (p.hbar(), p.mass());
    let energy = 0.5 * m * h.v_x * h.v_x + mode.energy(p);
    let r = h.u_x * m / hbar;
    let omega_q = hbar / m * r * r;
    let re_var = energy - 0.5 * hbar * omega_q;
    Some(ReVarRecord {
        x,
        z,
        energy,
        omega_q,
        re_var,
        violation: re_var < 0.0,
    })
}

/// Evaluates `Re (m/2)Var(𝒰)` at each point. Violations are reported, not raised.
pub fn check_re_var_of<S: WaveSource>(
    source: &S,
    points: &[(f64, f64)],
    mode: Longitudinal,
) -> ReVarScan {
    let found: Vec<Option<ReVarRecord>> = points
        .par_iter()
        .map(|&(x, z)| re_var_record(source, x, z, mode))
        .collect();
    let singular = found.iter().filter(|r| r.is_none()).count();
    let records: Vec<ReVarRecord> = found.into_iter().flatten().collect();
    ReVarScan {
        mode,
        violations: records.iter().filter(|r| r.violation).count(),
        negative_omega: records.iter().filter(|r| !(r.omega_q >= 0.0)).count(),
        records,
        singular,
    }
}

pub fn check_re_var(
    points: &[(f64, f64)],
    params: &PhysicalParams,
    grating: &GratingConfig,
    mode: Longitudinal,
) -> ReVarScan {
    check_re_var_of(&NSlitWave::new(params, grating), points, mode)
}

/// Grid nodes with `ρ ≥ eps_rho · max ρ`, as `(x, z)` pairs in node order.
pub fn valid_grid_points(
    rho: &ndarray::Array2<f64>,
    grid: &GridSpec,
    eps_rho: f64,
) -> Vec<(f64, f64)> {
    let max = rho.iter().fold(0.0, |m: f64, &r| m.max(r));
    let floor = eps_rho * max;
    rho.indexed_iter()
        .filter(|(_, &r)| r >= floor && r > 0.0)
        .map(|((i, j), _)| (grid.x(i), grid.z(j)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRecord {
    pub z: f64,
    pub delta_e: f64,
    pub delta_omega: f64,
    /// `δE · δt` with `δt = 1/|δω_Q|`; NaN when indeterminate.
    pub product_e_t: f64,
    pub delta_p: f64,
    pub delta_r: f64,
    /// `|δp · δr|`; NaN when indeterminate.
    pub product_p_r: f64,
    /// `|δE δt| ≥ ħ/2`, or `None` when indeterminate.
    pub satisfied: Option<bool>,
    pub satisfied_p_r: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub id_a: usize,
    pub id_b: usize,
    pub records: Vec<PairRecord>,
    pub determinate: usize,
    pub indeterminate: usize,
    /// Fraction of determinate samples with `|δE δt| ≥ ħ/2`; NaN when none are determinate.
    pub fraction_e_t: f64,
    pub fraction_p_r: f64,
}

/// Pairwise products along two neighbouring trajectories sampled at the same z values.
pub fn pairwise_uncertainty(
    a: &Trajectory,
    b: &Trajectory,
    params: &PhysicalParams,
) -> Result<PairReport> {
    if a.points.len() != b.points.len() {
        return Err(Error::domain(format!(
            "trajectories {} and {} have {} and {} samples",
            a.id,
            b.id,
            a.points.len(),
            b.points.len()
        )));
    }
    let (hbar, m) = (params.hbar(), params.mass());
    let bound = 0.5 * hbar;
    let mut records = Vec::with_capacity(a.points.len());
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if pa.z != pb.z {
            return Err(Error::domain(format!(
                "trajectory samples differ in z: {:e} vs {:e}",
                pa.z, pb.z
            )));
        }
        // the longitudinal energy is common to both and cancels
        let delta_e = 0.5 * m * (pb.v_x * pb.v_x - pa.v_x * pa.v_x);
        let delta_omega = pb.omega_q - pa.omega_q;
        let delta_p = m * (pb.v_x - pa.v_x);
        let determinate = delta_omega.abs() >= INDETERMINATE_OMEGA;
        let (product_e_t, delta_r, product_p_r) = if determinate {
            let dt = 1.0 / delta_omega.abs();
            let dr = pa.v_x * dt;
            (delta_e * dt, dr, (delta_p * dr).abs())
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        records.push(PairRecord {
            z: pa.z,
            delta_e,
            delta_omega,
            product_e_t,
            delta_p,
            delta_r,
            product_p_r,
            satisfied: determinate.then(|| product_e_t.abs() >= bound),
            satisfied_p_r: determinate.then_some(product_p_r >= bound),
        });
    }
    let determinate = records.iter().filter(|r| r.satisfied.is_some()).count();
    let fraction = |f: fn(&PairRecord) -> Option<bool>| {
        if determinate == 0 {
            f64::NAN
        } else {
            records.iter().filter(|r| f(r) == Some(true)).count() as f64 / determinate as f64
        }
    };
    Ok(PairReport {
        id_a: a.id,
        id_b: b.id,
        fraction_e_t: fraction(|r| r.satisfied),
        fraction_p_r: fraction(|r| r.satisfied_p_r),
        indeterminate: records.len() - determinate,
        determinate,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UncertaintySummary {
    pub mode: Longitudinal,
    pub scanned_points: usize,
    pub singular_points: usize,
    pub re_var_violations: usize,
    pub min_re_var_j: f64,
    pub negative_omega_q: usize,
    pub pairs: usize,
    pub determinate_samples: usize,
    pub indeterminate_samples: usize,
    pub fraction_e_t: f64,
    pub fraction_p_r: f64,
}

/// Grid scan plus pairwise products of a set of pairs.
#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyReport {
    pub scan: ReVarScan,
    pub pairs: Vec<PairReport>,
}

impl UncertaintyReport {
    pub fn summary(&self) -> UncertaintySummary {
        let determinate: usize = self.pairs.iter().map(|p| p.determinate).sum();
        let weighted = |f: fn(&PairReport) -> f64| {
            if determinate == 0 {
                return f64::NAN;
            }
            self.pairs
                .iter()
                .filter(|p| p.determinate > 0)
                .map(|p| f(p) * p.determinate as f64)
                .sum::<f64>()
                / determinate as f64
        };
        UncertaintySummary {
            mode: self.scan.mode,
            scanned_points: self.scan.records.len(),
            singular_points: self.scan.singular,
            re_var_violations: self.scan.violations,
            min_re_var_j: self.scan.min_re_var(),
            negative_omega_q: self.scan.negative_omega,
            pairs: self.pairs.len(),
            determinate_samples: determinate,
            indeterminate_samples: self.pairs.iter().map(|p| p.indeterminate).sum(),
            fraction_e_t: weighted(|p| p.fraction_e_t),
            fraction_p_r: weighted(|p| p.fraction_p_r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectories::{integrate_trajectory, EnsembleConfig, Integrator, Seeding};
    use crate::wavefield::PlaneWave;

    fn params() -> PhysicalParams {
        PhysicalParams::new(5e-12, 100.0).unwrap()
    }

    fn fig_grating() -> GratingConfig {
        GratingConfig::new(9, 25e-9, 250e-9).unwrap()
    }

    #[test]
    fn plane_wave_variance_is_longitudinal_energy() {
        let p = params();
        let w = PlaneWave::new(&p, 0.0);
        let v = variance_complex_velocity_of(&w, 1e-7, 0.0, Longitudinal::Included).unwrap();
        assert!((v.re - p.longitudinal_energy()).abs() < 1e-14 * p.longitudinal_energy());
        assert_eq!(v.im, 0.0);
        assert_eq!(omega_q_of(&w, 3e-8, 0.0).unwrap(), 0.0);
        let scan = check_re_var_of(&w, &[(0.0, 0.0), (1e-7, 0.01)], Longitudinal::Included);
        assert_eq!(scan.violations, 0);
        assert!((scan.records[0].re_var - p.longitudinal_energy()).abs() < 1e-30);
    }

    #[test]
    fn real_gaussian_axis_is_zero() {
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let v = variance_complex_velocity(0.0, 0.0, &p, &g, Longitudinal::Omitted).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gaussian_omega_at_sigma() {
        // |Ψ| = exp(-x²/2b²) at the grating, so ρ has variance σ² = b²/2 and
        // ∂x R/R = -x/2σ²
        let p = params();
        let g = GratingConfig::new(1, 25e-9, 250e-9).unwrap();
        let sigma = g.slit_width() / std::f64::consts::SQRT_2;
        let expected = p.hbar() / (4.0 * p.mass() * sigma * sigma);
        let w = omega_q(sigma, 0.0, &p, &g).unwrap();
        assert!((w - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn direct_and_expansion_agree() {
        let p = params();
        let g = fig_grating();
        let w = NSlitWave::new(&p, &g);
        for &(x, z) in &[(3.1e-8, 0.01), (-2.2e-7, 0.03), (4e-7, 0.11), (1e-9, 0.002)] {
            for mode in [Longitudinal::Omitted, Longitudinal::Included] {
                let direct = variance_complex_velocity_of(&w, x, z, mode).unwrap();
                let (expanded, scale) = variance_operator_expansion(&w, x, z, mode).unwrap();
                let denom = scale.max(direct.norm());
                assert!(
                    (direct - expanded).norm() < 1e-10 * denom,
                    "{x} {z} {mode:?}"
                );
            }
        }
    }

    #[test]
    fn generic_point_decomposition() {
        let p = params();
        let g = fig_grating();
        let (x, z) = (7e-8, 0.017);
        let h = LocalHydro::at(&NSlitWave::new(&p, &g), x, z).unwrap();
        let v = variance_complex_velocity(x, z, &p, &g, Longitudinal::Included).unwrap();
        let m = p.mass();
        let re = 0.5 * m * (h.v_x * h.v_x + p.v_z() * p.v_z() - h.u_x * h.u_x);
        let im = -m * h.v_x * h.u_x;
        assert!((v.re - re).abs() < 1e-12 * re.abs());
        assert!((v.im - im).abs() < 1e-12 * im.abs().max(1e-40));
    }

    #[test]
    fn transverse_only_scan_shows_violations() {
        let p = params();
        let g = fig_grating();
        let pts: Vec<(f64, f64)> = (0..200).map(|k| (-4e-7 + 4e-9 * k as f64, 0.02)).collect();
        let with_k = check_re_var(&pts, &p, &g, Longitudinal::Included);
        let without = check_re_var(&pts, &p, &g, Longitudinal::Omitted);
        assert_eq!(with_k.violations, 0);
        assert!(without.violations > 0);
        assert_eq!(with_k.negative_omega, 0);
    }

    fn pair(x0: f64, x1: f64) -> (Trajectory, Trajectory, PhysicalParams) {
        let p = params();
        let g = fig_grating();
        let w = NSlitWave::new(&p, &g);
        let cfg = EnsembleConfig {
            n_trajectories: 2,
            seeding: Seeding::UniformAcrossSlits,
            z_start: 0.0,
            z_end: 0.01,
            integrator: Integrator::Rk4,
            dz: 2.5e-5,
            record_every: 4,
        };
        (
            integrate_trajectory(0, x0, &cfg, &w),
            integrate_trajectory(1, x1, &cfg, &w),
            p,
        )
    }

    #[test]
    fn identical_trajectories_are_indeterminate() {
        let (a, _, p) = pair(6e-8, 6.5e-8);
        let r = pairwise_uncertainty(&a, &a, &p).unwrap();
        assert_eq!(r.determinate, 0);
        assert_eq!(r.indeterminate, a.points.len());
        assert!(r.fraction_e_t.is_nan());
    }

    #[test]
    fn pair_records_follow_construction() {
        let (a, b, p) = pair(6e-8, 6.5e-8);
        let r = pairwise_uncertainty(&a, &b, &p).unwrap();
        assert!(r.determinate > 0);
        for (rec, (pa, pb)) in r.records.iter().zip(a.points.iter().zip(&b.points)) {
            if rec.satisfied.is_none() {
                continue;
            }
            let dt = 1.0 / (pb.omega_q - pa.omega_q).abs();
            let de = 0.5 * p.mass() * (pb.v_x.powi(2) - pa.v_x.powi(2));
            assert!((rec.product_e_t - de * dt).abs() <= 1e-12 * (de * dt).abs());
            let dpdr = (p.mass() * (pb.v_x - pa.v_x) * pa.v_x * dt).abs();
            assert!((rec.product_p_r - dpdr).abs() <= 1e-12 * dpdr);
        }
    }

    #[test]
    fn mismatched_samples_rejected() {
        let (a, mut b, p) = pair(6e-8, 6.5e-8);
        b.points.pop();
        assert!(pairwise_uncertainty(&a, &b, &p).is_err());
    }
}
