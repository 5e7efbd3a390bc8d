//! Closed-form N-slit wave function, its analytic derivatives and density.
//!
//! In the scaled coordinates `X = x / b`, `ξ = λ z / (2π b²)` and with `a = 1 + iξ`,
//!
//! ```text
//! Ψ(X, ξ) = 1 / (N √a) · Σ_n exp(-(X - X_n)² / (2a))
//! ```
//!
//! The plane-wave factor `exp(ikz)` is not part of `Ψ`.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{fresnel_parameter, GratingConfig, GridSpec, PhysicalParams};

pub type ComplexAmplitude = Complex64;

/// Exponents below this underflow to zero in `exp`.
const UNDERFLOW_EXPONENT: f64 = -745.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveGradient {
    /// 1/m
    pub dpsi_dx: Complex64,
    /// 1/m
    pub dpsi_dz: Complex64,
}

/// Value and transverse derivatives at one point (SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveJet {
    pub psi: Complex64,
    pub dpsi_dx: Complex64,
    pub d2psi_dx2: Complex64,
}

impl WaveJet {
    pub fn density(&self) -> f64 {
        self.psi.norm_sqr()
    }

    /// `∂xΨ / Ψ`; its imaginary part is `∂x S / ħ`, its real part `∂x R / R`.
    pub fn log_derivative(&self) -> Complex64 {
        self.dpsi_dx / self.psi
    }
}

/// A wave function that can be evaluated analytically at any point.
pub trait WaveSource: Sync {
    fn params(&self) -> &PhysicalParams;
    fn psi(&self, x: f64, z: f64) -> Complex64;
    fn jet(&self, x: f64, z: f64) -> WaveJet;
}

/// Free-space field behind an N-slit grating of Gaussian apertures, geometry pre-scaled.
#[derive(Debug, Clone)]
pub struct NSlitWave {
    params: PhysicalParams,
    grating: GratingConfig,
    /// Positive slit centers in units of b, outermost first.
    half_centers: Vec<f64>,
    central_slit: bool,
    xi_per_m: f64,
}

#[derive(Default)]
struct TermSums {
    s0: Complex64,
    s1: Complex64,
    s2: Complex64,
    s_xi: Complex64,
}

impl std::ops::AddAssign for TermSums {
    fn add_assign(&mut self, o: Self) {
        self.s0 += o.s0;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s_xi += o.s_xi;
    }
}

impl std::ops::Add for TermSums {
    type Output = TermSums;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Order {
    Value,
    First,
    Full,
}

impl NSlitWave {
    pub fn new(params: &PhysicalParams, grating: &GratingConfig) -> Self {
        let n = grating.n_slits();
        let b = grating.slit_width();
        let half_centers = (0..n / 2)
            .map(|k| ((n as f64 - 1.0) / 2.0 - k as f64) * grating.pitch() / b)
            .collect();
        Self {
            params: *params,
            grating: *grating,
            half_centers,
            central_slit: n % 2 == 1,
            xi_per_m: fresnel_parameter(1.0, params, grating),
        }
    }

    pub fn grating(&self) -> &GratingConfig {
        &self.grating
    }

    pub fn fresnel(&self, z: f64) -> f64 {
        self.xi_per_m * z
    }

    /// Per-slit sums in scaled coordinates. Mirror slits are added in pairs so that
    /// the result is exactly even (value) or odd (first derivative) in `X`.
    fn sums(&self, big_x: f64, inv_a: Complex64, order: Order) -> TermSums {
        let term = |d: f64| -> TermSums {
            let d2 = d * d;
            let expo = -0.5 * d2 * inv_a;
            if expo.re < UNDERFLOW_EXPONENT {
                return TermSums::default();
            }
            let e = expo.exp();
            let mut t = TermSums {
                s0: e,
                ..Default::default()
            };
            if order >= Order::First {
                t.s1 = -(d * inv_a) * e;
                t.s_xi = Complex64::new(0.0, 0.5) * d2 * inv_a * inv_a * e;
            }
            if order == Order::Full {
                t.s2 = (d2 * inv_a * inv_a - inv_a) * e;
            }
            t
        };
        let mut acc = TermSums::default();
        for &c in &self.half_centers {
            acc += term(big_x + c) + term(big_x - c);
        }
        if self.central_slit {
            acc += term(big_x);
        }
        acc
    }

    fn prefactor(&self, xi: f64) -> (Complex64, Complex64) {
        let a = Complex64::new(1.0, xi);
        let pre = 1.0 / (self.grating.n_slits() as f64 * a.sqrt());
        (pre, 1.0 / a)
    }

    pub fn gradient(&self, x: f64, z: f64) -> WaveGradient {
        let b = self.grating.slit_width();
        let xi = self.fresnel(z);
        let (pre, inv_a) = self.prefactor(xi);
        let s = self.sums(x / b, inv_a, Order::First);
        // d/dξ [a^{-1/2}] = -(i/2) a^{-3/2}
        let dpsi_dxi = pre * (s.s_xi - Complex64::new(0.0, 0.5) * inv_a * s.s0);
        WaveGradient {
            dpsi_dx: pre * s.s1 / b,
            dpsi_dz: dpsi_dxi * self.xi_per_m,
        }
    }
}

impl WaveSource for NSlitWave {
    fn params(&self) -> &PhysicalParams {
        &self.params
    }

    fn psi(&self, x: f64, z: f64) -> Complex64 {
        let (pre, inv_a) = self.prefactor(self.fresnel(z));
        pre * self
            .sums(x / self.grating.slit_width(), inv_a, Order::Value)
            .s0
    }

    fn jet(&self, x: f64, z: f64) -> WaveJet {
        let b = self.grating.slit_width();
        let (pre, inv_a) = self.prefactor(self.fresnel(z));
        let s = self.sums(x / b, inv_a, Order::Full);
        WaveJet {
            psi: pre * s.s0,
            dpsi_dx: pre * s.s1 / b,
            d2psi_dx2: pre * s.s2 / (b * b),
        }
    }
}

/// `exp(i κ x)`, uniform density and linear phase.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    params: PhysicalParams,
    kappa: f64,
}

impl PlaneWave {
    pub fn new(params: &PhysicalParams, kappa: f64) -> Self {
        Self {
            params: *params,
            kappa,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl WaveSource for PlaneWave {
    fn params(&self) -> &PhysicalParams {
        &self.params
    }

    fn psi(&self, x: f64, _z: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.kappa * x)
    }

    fn jet(&self, x: f64, z: f64) -> WaveJet {
        let psi = self.psi(x, z);
        WaveJet {
            psi,
            dpsi_dx: Complex64::new(0.0, self.kappa) * psi,
            d2psi_dx2: -(self.kappa * self.kappa) * psi,
        }
    }
}

fn check_z(z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "propagation distance must be non-negative, got {z:e}"
        )))
    }
}

/// Closed-form `Ψ(x, z)` behind the grating.
pub fn evaluate_psi(
    x: f64,
    z: f64,
    params: &PhysicalParams,
    grating: &GratingConfig,
) -> Result<ComplexAmplitude> {
    check_z(z)?;
    Ok(NSlitWave::new(params, grating).psi(x, z))
}

/// Analytic `∂Ψ/∂x` and `∂Ψ/∂z`.
pub fn evaluate_grad_psi(
    x: f64,
    z: f64,
    params: &PhysicalParams,
    grating: &GratingConfig,
) -> Result<WaveGradient> {
    check_z(z)?;
    Ok(NSlitWave::new(params, grating).gradient(x, z))
}

/// `|Ψ(x, z)|²`.
pub fn density(x: f64, z: f64, params: &PhysicalParams, grating: &GratingConfig) -> Result<f64> {
    evaluate_psi(x, z, params, grating).map(|p| p.norm_sqr())
}

/// Complex amplitude sampled on a grid; `values[[i, j]]` is the node `(x(i), z(j))`.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub values: Array2<Complex64>,
    pub params: PhysicalParams,
    pub grating: Option<GratingConfig>,
}

impl ComplexField {
    /// Samples any analytic source on the grid.
    pub fn sample<S: WaveSource>(source: &S, grid: &GridSpec) -> Result<Self> {
        Self::from_fn(grid, source.params(), |x, z| source.psi(x, z))
    }

    pub fn from_fn<F>(grid: &GridSpec, params: &PhysicalParams, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        grid.validate()?;
        let (nx, nz) = (grid.nx, grid.nz);
        let mut buf: Vec<Complex64> = Vec::new();
        buf.try_reserve_exact(nx * nz)
            .map_err(|e| Error::Resource(format!("cannot allocate {nx}x{nz} field: {e}")))?;
        buf.resize(nx * nz, Complex64::new(0.0, 0.0));
        buf.par_chunks_mut(nz).enumerate().for_each(|(i, row)| {
            let x = grid.x(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x, grid.z(j));
            }
        });
        let values =
            Array2::from_shape_vec((nx, nz), buf).map_err(|e| Error::Resource(e.to_string()))?;
        Ok(Self {
            grid: *grid,
            values,
            params: *params,
            grating: None,
        })
    }

    pub fn density(&self) -> Array2<f64> {
        self.values.mapv(|v| v.norm_sqr())
    }
}

/// Dense sampling of the N-slit field. Nodes are independent and evaluated in parallel.
pub fn evaluate_field(
    grid: &GridSpec,
    params: &PhysicalParams,
    grating: &GratingConfig,
) -> Result<ComplexField> {
    let wave = NSlitWave::new(params, grating);
    let mut field = ComplexField::sample(&wave, grid)?;
    field.grating = Some(*grating);
    Ok(field)
}
