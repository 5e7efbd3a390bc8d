//! Independent reference propagators for the closed-form field.
//!
//! [`spectral_propagate`] multiplies the discrete spectrum by the free-particle kernel
//! `exp(-iħk²t/2m)` in SI units. [`fresnel_quadrature`] integrates the Fresnel kernel
//! against the aperture field with adaptive Gauss–Kronrod quadrature in scaled
//! coordinates. Neither path shares code with [`crate::wavefield`].

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{GratingConfig, PhysicalParams};
use crate::wavefield::{NSlitWave, WaveSource};

/// Fraction of the half width treated as the aliasing guard band.
const EDGE_BAND: f64 = 0.95;
/// Norm fraction inside the guard band that counts as aliasing.
const EDGE_TOLERANCE: f64 = 1e-8;
/// Aperture components are integrated over their center ± this many widths.
const QUADRATURE_SPAN: f64 = 10.0;
const DEFAULT_QUADRATURE_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 50_000;

/// The field at `z = 0` as a weighted sum of Gaussians `w · exp(-(x-c)²/2b²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aperture {
    width: f64,
    components: Vec<(f64, Complex64)>,
}

impl Aperture {
    pub fn new(width: f64, components: Vec<(f64, Complex64)>) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::domain("aperture width must be positive"));
        }
        if components.is_empty() {
            return Err(Error::domain("aperture needs at least one component"));
        }
        Ok(Self { width, components })
    }

    /// Equal-weight slits, normalised by `1/N`.
    pub fn grating(grating: &GratingConfig) -> Self {
        let w = Complex64::new(1.0 / grating.n_slits() as f64, 0.0);
        Self {
            width: grating.slit_width(),
            components: grating.slit_centers().into_iter().map(|c| (c, w)).collect(),
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn components(&self) -> &[(f64, Complex64)] {
        &self.components
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let b = self.width;
        self.components
            .iter()
            .map(|&(c, w)| {
                let s = (x - c) / b;
                w * (-0.5 * s * s).exp()
            })
            .sum()
    }

    /// `α·self + β·other`; both must share the Gaussian width.
    pub fn combine(&self, alpha: Complex64, other: &Aperture, beta: Complex64) -> Result<Self> {
        if self.width != other.width {
            return Err(Error::domain(
                "apertures with different widths cannot be combined",
            ));
        }
        let mut components: Vec<(f64, Complex64)> = self
            .components
            .iter()
            .map(|&(c, w)| (c, alpha * w))
            .collect();
        components.extend(other.components.iter().map(|&(c, w)| (c, beta * w)));
        Ok(Self {
            width: self.width,
            components,
        })
    }

    fn extent(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0, |m: f64, &(c, _)| m.max(c.abs()))
            + self.width
    }
}

/// Uniform periodic grid `x_k = -L + k·2L/n` carrying the aperture field.
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    n_points: usize,
    half_width: f64,
    aperture: Aperture,
    initial: Vec<Complex64>,
}

impl SpectralDomain {
    pub fn new(aperture: Aperture, n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::domain(format!(
                "spectral grid size {n_points} is not a power of two"
            )));
        }
        if !(half_width > aperture.extent()) || !half_width.is_finite() {
            return Err(Error::domain(
                "spectral half width must exceed the aperture extent",
            ));
        }
        let dx = 2.0 * half_width / n_points as f64;
        let initial = (0..n_points)
            .map(|k| aperture.eval(-half_width + k as f64 * dx))
            .collect();
        Ok(Self {
            n_points,
            half_width,
            aperture,
            initial,
        })
    }

    /// 2¹⁶ points over `6 × (extent + b·max(1, ξ(z_max)))`, which keeps the spread beam
    /// many widths away from the periodic boundary.
    pub fn for_grating(
        grating: &GratingConfig,
        params: &PhysicalParams,
        z_max: f64,
    ) -> Result<Self> {
        let b = grating.slit_width();
        let xi = crate::params::fresnel_parameter(z_max.max(0.0), params, grating);
        let extent = grating.half_extent() + b;
        Self::new(
            Aperture::grating(grating),
            1 << 16,
            6.0 * (extent + b * xi.max(1.0)),
        )
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.dx()
    }

    pub fn initial(&self) -> &[Complex64] {
        &self.initial
    }

    pub fn aperture(&self) -> &Aperture {
        &self.aperture
    }

    /// Nearest node index to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.dx()).round();
        k.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// `Σ |ψ|² dx` on a uniform grid.
pub fn discrete_norm(values: &[Complex64], dx: f64) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
}

fn edge_fraction(domain: &SpectralDomain, values: &[Complex64]) -> f64 {
    let total: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    let band = EDGE_BAND * domain.half_width;
    let edge: f64 = values
        .iter()
        .enumerate()
        .filter(|(k, _)| domain.x(*k).abs() > band)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Free propagation of the domain's initial field to distance `z`.
pub fn spectral_propagate(
    domain: &SpectralDomain,
    z: f64,
    params: &PhysicalParams,
) -> Result<Vec<Complex64>> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::domain(format!(
            "propagation distance must be non-negative, got {z:e}"
        )));
    }
    if z == 0.0 {
        return Ok(domain.initial.clone());
    }
    let n = domain.n_points;
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf = domain.initial.clone();
    forward.process(&mut buf);
    let t = params.time_of_flight(z);
    let rate = params.hbar() * t / (2.0 * params.mass());
    let dk = PI / domain.half_width;
    let scale = 1.0 / n as f64;
    for (j, v) in buf.iter_mut().enumerate() {
        let signed = if j < n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        };
        let k = signed * dk;
        *v *= Complex64::from_polar(scale, -rate * k * k);
    }
    inverse.process(&mut buf);
    let fraction = edge_fraction(domain, &buf);
    if fraction >= EDGE_TOLERANCE {
        return Err(Error::DomainTooSmall {
            edge_fraction: fraction,
            z,
        });
    }
    Ok(buf)
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1]; index 7 is the midpoint.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

struct Interval {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}

impl Eq for Interval {}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection of the worst interval; returns the estimate and its
/// error bound.
fn adaptive_gk15<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval {
        lo: a,
        hi: b,
        value,
        error,
    });
    let mut total = value;
    let mut error = error;
    let fail = |total: Complex64, error: f64| Error::Tolerance {
        estimate_re: total.re,
        estimate_im: total.im,
        achieved: error,
        requested: tol,
    };
    while error > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(fail(total, error));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            return Err(fail(total, error));
        }
        let (v1, e1) = gk15(f, worst.lo, mid);
        let (v2, e2) = gk15(f, mid, worst.hi);
        total += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Interval {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Interval {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the running-update rounding
    let total = heap.iter().map(|i| i.value).sum();
    let error = heap.iter().map(|i| i.error).sum();
    Ok((total, error))
}

/// `Ψ(x, z) = ∫ (2πiξ)^{-1/2} exp(i(X-X')²/2ξ) Ψ₀(X') dX'` with `X = x/b`, integrated
/// component by component over each Gaussian's support.
pub fn fresnel_quadrature(
    x: f64,
    z: f64,
    aperture: &Aperture,
    params: &PhysicalParams,
) -> Result<Complex64> {
    fresnel_quadrature_tol(x, z, aperture, params, DEFAULT_QUADRATURE_TOL)
}

pub fn fresnel_quadrature_tol(
    x: f64,
    z: f64,
    aperture: &Aperture,
    params: &PhysicalParams,
    tol: f64,
) -> Result<Complex64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain(format!("quadrature needs z > 0, got {z:e}")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("quadrature tolerance must be positive"));
    }
    let b = aperture.width;
    let xi = params.lambda() * z / (2.0 * PI * b * b);
    let big_x = x / b;
    let norm = (Complex64::new(0.0, 2.0 * PI * xi)).sqrt().inv();
    let per_component = tol / aperture.components.len() as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for &(c, w) in &aperture.components {
        let cx = c / b;
        let f = |xp: f64| {
            let s = xp - cx;
            let d = big_x - xp;
            Complex64::from_polar((-0.5 * s * s).exp(), 0.5 * d * d / xi)
        };
        let (v, _) = adaptive_gk15(
            &f,
            cx - QUADRATURE_SPAN,
            cx + QUADRATURE_SPAN,
            per_component,
        )?;
        sum += w * v;
    }
    Ok(norm * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldComparison {
    pub z: f64,
    /// Nodes compared (those within the window).
    pub nodes: usize,
    pub max_abs_psi: f64,
    pub mean_abs_psi: f64,
    /// Max `|Δψ| / max|ψ|`.
    pub max_rel_psi: f64,
    pub max_abs_rho: f64,
    pub mean_abs_rho: f64,
    /// Max `|Δρ| / max ρ`.
    pub max_rel_rho: f64,
    pub mean_rel_rho: f64,
}

impl FieldComparison {
    fn from_pairs(z: f64, pairs: impl Iterator<Item = (Complex64, Complex64)>) -> Self {
        let (mut n, mut psi_max, mut rho_max) = (0usize, 0.0f64, 0.0f64);
        let (mut dpsi_max, mut dpsi_sum, mut drho_max, mut drho_sum) = (0.0f64, 0.0, 0.0f64, 0.0);
        for (reference, other) in pairs {
            n += 1;
            psi_max = psi_max.max(reference.norm());
            rho_max = rho_max.max(reference.norm_sqr());
            let dpsi = (reference - other).norm();
            let drho = (reference.norm_sqr() - other.norm_sqr()).abs();
            dpsi_max = dpsi_max.max(dpsi);
            dpsi_sum += dpsi;
            drho_max = drho_max.max(drho);
            drho_sum += drho;
        }
        let nn = n.max(1) as f64;
        Self {
            z,
            nodes: n,
            max_abs_psi: dpsi_max,
            mean_abs_psi: dpsi_sum / nn,
            max_rel_psi: dpsi_max / psi_max,
            max_abs_rho: drho_max,
            mean_abs_rho: drho_sum / nn,
            max_rel_rho: drho_max / rho_max,
            mean_rel_rho: drho_sum / nn / rho_max,
        }
    }
}

/// Closed-form field against the spectral field at the domain nodes with `|x| ≤ window`.
/// Relative errors are normalised by the closed-form maximum within the window.
pub fn compare_analytic_spectral(
    source: &NSlitWave,
    domain: &SpectralDomain,
    z: f64,
    window: f64,
) -> Result<FieldComparison> {
    let spectral = spectral_propagate(domain, z, source.params())?;
    let pairs = spectral
        .iter()
        .enumerate()
        .filter(|(k, _)| domain.x(*k).abs() <= window)
        .map(|(k, &s)| (source.psi(domain.x(k), z), s));
    Ok(FieldComparison::from_pairs(z, pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotCheck {
    pub x: f64,
    pub z: f64,
    pub spectral_re: f64,
    pub spectral_im: f64,
    pub quadrature_re: f64,
    pub quadrature_im: f64,
    /// `|ψ_spectral - ψ_quadrature|`.
    pub abs_err: f64,
    /// `abs_err / max|ψ_spectral|` over the comparison window at this z.
    pub rel_err: f64,
}

/// Spectral field against quadrature at `n` random nodes. Points are drawn on spectral
/// nodes inside `±window`, with z uniform in `z_range`.
pub fn spot_check(
    domain: &SpectralDomain,
    params: &PhysicalParams,
    n: usize,
    window: f64,
    z_range: (f64, f64),
    seed: u64,
) -> Result<Vec<SpotCheck>> {
    let (z_lo, z_hi) = z_range;
    if !(z_lo > 0.0 && z_hi >= z_lo) {
        return Err(Error::domain(
            "spot-check z range must be positive and ordered",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = domain.nearest_index(-window);
    let hi = domain.nearest_index(window);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.random_range(lo..=hi);
        let z = if z_hi > z_lo {
            rng.random_range(z_lo..z_hi)
        } else {
            z_lo
        };
        let field = spectral_propagate(domain, z, params)?;
        let scale = (lo..=hi).map(|i| field[i].norm()).fold(0.0, f64::max);
        let x = domain.x(k);
        let q = fresnel_quadrature(x, z, &domain.aperture, params)?;
        let s = field[k];
        let abs_err = (s - q).norm();
        out.push(SpotCheck {
            x,
            z,
            spectral_re: s.re,
            spectral_im: s.im,
            quadrature_re: q.re,
            quadrature_im: q.im,
            abs_err,
            rel_err: abs_err / scale,
        });
    }
    Ok(out)
}

/// `∫ρ dx` of the closed-form field, trapezoid on the spectral nodes.
pub fn analytic_norm(source: &NSlitWave, domain: &SpectralDomain, z: f64) -> f64 {
    let values: Vec<Complex64> = (0..domain.n_points)
        .map(|k| source.psi(domain.x(k), z))
        .collect();
    discrete_norm(&values, domain.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::talbot_length;

    fn params() -> PhysicalParams {
        PhysicalParams::new(5e-12, 100.0).unwrap()
    }

    fn single() -> GratingConfig {
        GratingConfig::new(1, 25e-9, 250e-9).unwrap()
    }

    #[test]
    fn domain_validation() {
        let a = Aperture::grating(&single());
        assert!(SpectralDomain::new(a.clone(), 1000, 1e-6).is_err());
        assert!(SpectralDomain::new(a.clone(), 1024, 1e-9).is_err());
        assert!(Aperture::new(0.0, vec![(0.0, Complex64::new(1.0, 0.0))]).is_err());
        assert!(Aperture::new(1.0, vec![]).is_err());
        let d = SpectralDomain::new(a, 1024, 1e-6).unwrap();
        assert_eq!(d.x(0), -1e-6);
        assert_eq!(d.x(512), 0.0);
        assert_eq!(d.nearest_index(0.0), 512);
    }

    #[test]
    fn initial_matches_closed_form_at_grating() {
        let p = params();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let d = SpectralDomain::for_grating(&g, &p, 0.1).unwrap();
        let w = NSlitWave::new(&p, &g);
        let worst = (0..d.n_points())
            .step_by(7)
            .map(|k| (d.initial()[k] - w.psi(d.x(k), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-15, "{worst}");
    }

    #[test]
    fn zero_distance_is_identity() {
        let p = params();
        let d = SpectralDomain::for_grating(&single(), &p, 0.01).unwrap();
        assert_eq!(spectral_propagate(&d, 0.0, &p).unwrap(), d.initial());
        assert!(spectral_propagate(&d, -1.0, &p).is_err());
    }

    #[test]
    fn single_gaussian_matches_closed_form() {
        let p = params();
        let g = single();
        let z_t = talbot_length(g.pitch(), p.lambda()).unwrap();
        let d = SpectralDomain::for_grating(&g, &p, z_t).unwrap();
        let cmp =
            compare_analytic_spectral(&NSlitWave::new(&p, &g), &d, z_t, d.half_width()).unwrap();
        assert!(cmp.max_rel_psi < 1e-8, "{cmp:?}");
    }

    #[test]
    fn unitary() {
        let p = params();
        let g = GratingConfig::new(9, 25e-9, 250e-9).unwrap();
        let z_t = talbot_length(g.pitch(), p.lambda()).unwrap();
        let d = SpectralDomain::for_grating(&g, &p, 6.0 * z_t).unwrap();
        let n0 = discrete_norm(d.initial(), d.dx());
        let n1 = discrete_norm(&spectral_propagate(&d, 6.0 * z_t, &p).unwrap(), d.dx());
        assert!(((n1 - n0) / n0).abs() < 1e-12);
    }

    #[test]
    fn small_domain_is_detected() {
        let p = params();
        let g = single();
        let d = SpectralDomain::new(Aperture::grating(&g), 1024, 2e-7).unwrap();
        assert!(matches!(
            spectral_propagate(&d, 0.1, &p),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn quadrature_axis_single_slit() {
        let p = params();
        let g = single();
        let z_t = talbot_length(g.pitch(), p.lambda()).unwrap();
        let q = fresnel_quadrature(0.0, z_t, &Aperture::grating(&g), &p).unwrap();
        let exact = NSlitWave::new(&p, &g).psi(0.0, z_t);
        assert!((q - exact).norm() < 1e-6 * exact.norm());
        assert!(fresnel_quadrature(0.0, 0.0, &Aperture::grating(&g), &p).is_err());
    }

    #[test]
    fn quadrature_is_linear() {
        let p = params();
        let b = 25e-9;
        let one = Complex64::new(1.0, 0.0);
        let a1 = Aperture::new(b, vec![(-1e-7, one)]).unwrap();
        let a2 = Aperture::new(b, vec![(2e-7, Complex64::new(0.3, -0.7))]).unwrap();
        let (alpha, beta) = (Complex64::new(0.5, 2.0), Complex64::new(-1.5, 0.25));
        let mixed = a1.combine(alpha, &a2, beta).unwrap();
        let (x, z) = (4e-8, 0.004);
        let lhs = fresnel_quadrature(x, z, &mixed, &p).unwrap();
        let rhs = alpha * fresnel_quadrature(x, z, &a1, &p).unwrap()
            + beta * fresnel_quadrature(x, z, &a2, &p).unwrap();
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(rhs.norm()));
    }

    #[test]
    fn quadrature_reports_tolerance_failure() {
        let p = params();
        let a = Aperture::grating(&single());
        let r = fresnel_quadrature_tol(0.0, 0.01, &a, &p, 1e-300);
        assert!(matches!(r, Err(Error::Tolerance { .. })));
    }
}
