//! CSV and PGM writers. Numbers use Rust's shortest round-trip `{:e}` form, so output
//! is byte-identical across runs.

use std::io::{self, Write};

use ndarray::Array2;

use crate::params::GridSpec;
use crate::trajectories::Trajectory;
use crate::uncertainty::{PairReport, ReVarScan};
use crate::wavefield::ComplexField;

pub const DEFAULT_GAMMA: f64 = 0.5;

pub fn write_field_csv<W: Write>(mut w: W, field: &ComplexField) -> io::Result<()> {
    writeln!(w, "x_m,z_m,re,im,rho")?;
    let g = &field.grid;
    for j in 0..g.nz {
        for i in 0..g.nx {
            let v = field.values[[i, j]];
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e}",
                g.x(i),
                g.z(j),
                v.re,
                v.im,
                v.norm_sqr()
            )?;
        }
    }
    w.flush()
}

/// One gridded quantity; masked or non-finite nodes are written as empty cells.
pub fn write_quantity_csv<W: Write>(
    mut w: W,
    grid: &GridSpec,
    name: &str,
    values: &Array2<f64>,
    mask: Option<&Array2<bool>>,
) -> io::Result<()> {
    writeln!(w, "x_m,z_m,{name}")?;
    for j in 0..grid.nz {
        for i in 0..grid.nx {
            let v = values[[i, j]];
            let keep = mask.is_none_or(|m| m[[i, j]]) && v.is_finite();
            if keep {
                writeln!(w, "{:e},{:e},{:e}", grid.x(i), grid.z(j), v)?;
            } else {
                writeln!(w, "{:e},{:e},", grid.x(i), grid.z(j))?;
            }
        }
    }
    w.flush()
}

pub fn write_trajectories_csv<W: Write>(mut w: W, trajectories: &[Trajectory]) -> io::Result<()> {
    writeln!(w, "traj_id,z_m,x_m,vx_mps,rho,Q_J,omega_q_per_s")?;
    for t in trajectories {
        for p in &t.points {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                t.id, p.z, p.x, p.v_x, p.rho, p.q, p.omega_q
            )?;
        }
    }
    w.flush()
}

pub fn write_re_var_csv<W: Write>(mut w: W, scan: &ReVarScan) -> io::Result<()> {
    writeln!(w, "x_m,z_m,E_J,omega_q,re_var_J,violation")?;
    for r in &scan.records {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{}",
            r.x, r.z, r.energy, r.omega_q, r.re_var, r.violation as u8
        )?;
    }
    w.flush()
}

/// Indeterminate samples have empty product cells and an empty `satisfied` cell.
pub fn write_pairs_csv<W: Write>(mut w: W, pairs: &[PairReport]) -> io::Result<()> {
    writeln!(w, "traj_a,traj_b,z_m,dE_J,domega,dEdt_Js,dpdr_Js,satisfied")?;
    let cell = |v: f64| {
        if v.is_finite() {
            format!("{v:e}")
        } else {
            String::new()
        }
    };
    for pair in pairs {
        for r in &pair.records {
            let sat = match r.satisfied {
                Some(s) => (s as u8).to_string(),
                None => String::new(),
            };
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{},{},{}",
                pair.id_a,
                pair.id_b,
                r.z,
                r.delta_e,
                r.delta_omega,
                cell(r.product_e_t),
                cell(r.product_p_r),
                sat
            )?;
        }
    }
    w.flush()
}

/// Binary 16-bit greyscale: width `nx`, height `nz`, row `r` is z index `r`, samples
/// `round(65535 (ρ/ρ_max)^γ)` big-endian.
pub fn write_pgm<W: Write>(mut w: W, rho: &Array2<f64>, gamma: f64) -> io::Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "gamma must be positive",
        ));
    }
    let (nx, nz) = rho.dim();
    let max = rho
        .iter()
        .fold(0.0, |m: f64, &r| if r.is_finite() { m.max(r) } else { m });
    write!(w, "P5\n{nx} {nz}\n65535\n")?;
    let mut row = Vec::with_capacity(2 * nx);
    for j in 0..nz {
        row.clear();
        for i in 0..nx {
            let r = rho[[i, j]];
            let level = if max > 0.0 && r.is_finite() && r > 0.0 {
                (65535.0 * (r / max).min(1.0).powf(gamma)).round() as u16
            } else {
                0
            };
            row.extend_from_slice(&level.to_be_bytes());
        }
        w.write_all(&row)?;
    }
    w.flush()
}
