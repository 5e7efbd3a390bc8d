use std::io::Write;

use ndarray::Array2;
use qhydro::checks::{format_outcome, run_all, CheckConfig};
use qhydro::export::{
    write_field_csv, write_pairs_csv, write_pgm, write_quantity_csv, write_re_var_csv,
    write_trajectories_csv,
};
use qhydro::madelung::{decompose, quantum_potential_from_density, LocalHydro};
use qhydro::trajectories::{
    find_crossings, integrate_seeds_of, integrate_trajectory, seed_positions, Integrator,
};
use qhydro::uncertainty::{
    check_re_var_of, pairwise_uncertainty, valid_grid_points, UncertaintyReport,
};
use qhydro::{ComplexField, FieldStats, GridSpec, Trajectory, WaveSource};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum, serde::Serialize)]
pub enum Quantity {
    #[value(name = "rho")]
    Rho,
    #[value(name = "S")]
    S,
    #[value(name = "vx")]
    Vx,
    #[value(name = "ux")]
    Ux,
    #[value(name = "Q")]
    Q,
    #[value(name = "P1")]
    P1,
    #[value(name = "P2")]
    P2,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::Rho,
        Quantity::S,
        Quantity::Vx,
        Quantity::Ux,
        Quantity::Q,
        Quantity::P1,
        Quantity::P2,
    ];

    fn id(self) -> &'static str {
        match self {
            Quantity::Rho => "rho",
            Quantity::S => "S",
            Quantity::Vx => "vx",
            Quantity::Ux => "ux",
            Quantity::Q => "Q",
            Quantity::P1 => "P1",
            Quantity::P2 => "P2",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Quantity::Rho => "rho",
            Quantity::S => "S_Js",
            Quantity::Vx => "vx_mps",
            Quantity::Ux => "ux_mps",
            Quantity::Q => "Q_J",
            Quantity::P1 => "P1",
            Quantity::P2 => "P2",
        }
    }
}

fn sample(cfg: &RunConfig) -> Result<(GridSpec, ComplexField), CliError> {
    let grid = cfg.resolve_grid()?;
    let field = ComplexField::sample(&cfg.source()?, &grid)?;
    Ok((grid, field))
}

fn pgm(w: &mut dyn Write, rho: &Array2<f64>, gamma: f64) -> std::io::Result<()> {
    write_pgm(w, rho, gamma)
}

pub fn carpet(cfg: &RunConfig, art: &mut Artifacts) -> Result<serde_json::Value, CliError> {
    let (grid, field) = sample(cfg)?;
    let rho = field.density();
    let defaults = [Format::Pgm, Format::Csv];
    if cfg.wants(Format::Pgm, &defaults) {
        art.write("carpet.pgm", |w| pgm(w, &rho, cfg.gamma))?;
    }
    if cfg.wants(Format::Csv, &defaults) {
        art.write("carpet.csv", |w| write_field_csv(w, &field))?;
    }
    let nx = grid.nx;
    let row: Vec<f64> = (0..nx).map(|i| rho[[i, 0]]).collect();
    let maxima: Vec<f64> = (1..nx.saturating_sub(1))
        .filter(|&i| row[i] > row[i - 1] && row[i] >= row[i + 1])
        .map(|i| grid.x(i))
        .collect();
    let mut asym = 0.0f64;
    for ((i, j), &r) in rho.indexed_iter() {
        asym = asym.max((r - rho[[nx - 1 - i, j]]).abs());
    }
    let stamps = json!({
        "grid": grid,
        "talbot_length_m": cfg.talbot_length()?,
        "gamma": cfg.gamma,
        "pgm_mapping": "round(65535 (rho / rho_max)^gamma), 16-bit big-endian, row = z index",
        "rho_max": rho.iter().fold(0.0f64, |m, &r| m.max(r)),
        "first_row_maxima_x_m": maxima,
        "mirror_asymmetry_max_abs": asym,
    });
    if cfg.wants(Format::Json, &[]) {
        art.write_json("carpet_summary.json", &stamps)?;
    }
    Ok(stamps)
}

fn integrate(
    cfg: &RunConfig,
    integrator: Integrator,
) -> Result<(Vec<f64>, Vec<Trajectory>), CliError> {
    let mut ens = cfg.resolve_ensemble()?;
    ens.integrator = integrator;
    let seeds = match &cfg.ensemble.seeds_m {
        Some(s) => s.clone(),
        None => seed_positions(&ens, &cfg.grating()?),
    };
    let trajs = integrate_seeds_of(&ens, &seeds, &cfg.source()?)?;
    Ok((seeds, trajs))
}

/// Carpet density with every recorded trajectory sample drawn in black.
fn overlay(cfg: &RunConfig, trajs: &[Trajectory]) -> Result<Array2<f64>, CliError> {
    let (grid, field) = sample(cfg)?;
    let mut rho = field.density();
    let dz = grid.dz();
    for t in trajs {
        for p in &t.points {
            let fi = (p.x - grid.x_min) / grid.dx();
            let fj = if dz > 0.0 {
                (p.z - grid.z_min) / dz
            } else {
                0.0
            };
            if fi < -0.5 || fj < -0.5 {
                continue;
            }
            let (i, j) = (fi.round() as usize, fj.round() as usize);
            if i < grid.nx && j < grid.nz {
                rho[[i, j]] = 0.0;
            }
        }
    }
    Ok(rho)
}

pub fn trajectories(cfg: &RunConfig, art: &mut Artifacts) -> Result<serde_json::Value, CliError> {
    let ens = cfg.resolve_ensemble()?;
    let (seeds, trajs) = integrate(cfg, ens.integrator)?;
    let other = match ens.integrator {
        Integrator::Euler => Integrator::Rk4,
        Integrator::Rk4 => Integrator::Euler,
    };
    let (_, alt) = integrate(cfg, other)?;
    let divergence = trajs
        .iter()
        .zip(&alt)
        .filter(|(a, b)| a.completed() && b.completed())
        .filter_map(|(a, b)| Some((a.last()?.x - b.last()?.x).abs()))
        .fold(0.0f64, f64::max);

    let ordered = seeds.windows(2).all(|w| w[0] < w[1]);
    let crossings = if ordered {
        Some(find_crossings(&trajs))
    } else {
        None
    };
    let failures: Vec<String> = trajs
        .iter()
        .filter_map(|t| t.failure.as_ref().map(|e| e.to_string()))
        .collect();

    let defaults = [Format::Csv];
    if cfg.wants(Format::Csv, &defaults) {
        art.write("trajectories.csv", |w| write_trajectories_csv(w, &trajs))?;
    }
    if cfg.wants(Format::Pgm, &defaults) {
        let img = overlay(cfg, &trajs)?;
        art.write("trajectories_overlay.pgm", |w| pgm(w, &img, cfg.gamma))?;
    }
    let stamps = json!({
        "ensemble": ens,
        "trajectories": trajs.len(),
        "completed": trajs.iter().filter(|t| t.completed()).count(),
        "failures": failures,
        "seeds_ordered": ordered,
        "crossings": crossings.as_ref().map(|c| c.len()),
        "non_crossing": crossings.as_ref().map(|c| c.is_empty()),
        "comparison_integrator": other,
        "max_endpoint_divergence_m": divergence,
    });
    if cfg.wants(Format::Json, &[]) {
        art.write_json("trajectories_summary.json", &stamps)?;
    }
    Ok(stamps)
}

pub fn fields(
    cfg: &RunConfig,
    quantities: &[Quantity],
    art: &mut Artifacts,
) -> Result<serde_json::Value, CliError> {
    let (grid, field) = sample(cfg)?;
    let f = decompose(&field, cfg.eps_rho)?;
    let source = cfg.source()?;

    // analytic amplitude and density forms at every density-valid node
    let mut analytic = 0.0f64;
    for ((i, j), &ok) in f.density_valid.indexed_iter() {
        if !ok {
            continue;
        }
        if let Ok(h) = LocalHydro::at(&source, grid.x(i), grid.z(j)) {
            let scale = h.q_amplitude.abs().max(h.q_density.abs());
            if scale > 0.0 {
                analytic = analytic.max((h.q_amplitude - h.q_density).abs() / scale);
            }
        }
    }
    let q_rho = quantum_potential_from_density(&f.rho, &grid, source.params());
    let mut stencil = 0.0f64;
    for ((a, b), m) in f.q.iter().zip(q_rho.iter()).zip(f.mask.iter()) {
        let scale = a.abs().max(b.abs());
        if *m && scale > 0.0 && (a - b).is_finite() {
            stencil = stencil.max((a - b).abs() / scale);
        }
    }

    let mut quantities = quantities.to_vec();
    if quantities.is_empty() {
        quantities = Quantity::ALL.to_vec();
    }
    quantities.sort();
    quantities.dedup();
    let mut stats = serde_json::Map::new();
    for q in &quantities {
        let (values, mask) = match q {
            Quantity::Rho => (&f.rho, None),
            Quantity::S => (&f.action, Some(&f.density_valid)),
            Quantity::Vx => (&f.v_x, Some(&f.mask)),
            Quantity::Ux => (&f.u_x, Some(&f.mask)),
            Quantity::Q => (&f.q, Some(&f.mask)),
            Quantity::P1 => (&f.p1, Some(&f.mask)),
            Quantity::P2 => (&f.p2, Some(&f.mask)),
        };
        if cfg.wants(Format::Csv, &[Format::Csv]) {
            let name = format!("field_{}.csv", q.id());
            art.write(&name, |w| {
                write_quantity_csv(w, &grid, q.column(), values, mask)
            })?;
        }
        let s = match mask {
            Some(m) => FieldStats::of_masked(values, m),
            None => FieldStats::of(values),
        };
        stats.insert(
            q.id().to_string(),
            serde_json::to_value(s).unwrap_or_default(),
        );
    }
    let stamps = json!({
        "grid": grid,
        "eps_rho": cfg.eps_rho,
        "valid_nodes": f.valid_count(),
        "rho_max": f.rho_max(),
        "q_forms_analytic_max_relative_difference": analytic,
        "q_forms_stencil_max_relative_difference": stencil,
        "statistics": stats,
    });
    if cfg.wants(Format::Json, &[]) {
        art.write_json("fields_summary.json", &stamps)?;
    }
    Ok(stamps)
}

pub fn uncertainty(cfg: &RunConfig, art: &mut Artifacts) -> Result<serde_json::Value, CliError> {
    let (grid, field) = sample(cfg)?;
    let source = cfg.source()?;
    let mode = cfg.uncertainty.longitudinal;
    let points = valid_grid_points(&field.density(), &grid, cfg.eps_rho);
    let scan = check_re_var_of(&source, &points, mode);

    let ens = cfg.resolve_ensemble()?;
    let d = cfg.experiment.pitch_m;
    let mut pairs = Vec::new();
    for (k, [a, b]) in cfg.uncertainty.pairs_d.iter().enumerate() {
        let ta = integrate_trajectory(2 * k, a * d, &ens, &source);
        let tb = integrate_trajectory(2 * k + 1, b * d, &ens, &source);
        if let Some(e) = ta.failure.as_ref().or(tb.failure.as_ref()) {
            return Err(CliError::Config(format!(
                "pair {k} ({a} d, {b} d) did not complete: {e}"
            )));
        }
        pairs.push(pairwise_uncertainty(&ta, &tb, source.params())?);
    }
    let report = UncertaintyReport { scan, pairs };
    let summary = report.summary();
    let defaults = [Format::Csv, Format::Json];
    if cfg.wants(Format::Csv, &defaults) {
        art.write("uncertainty_grid.csv", |w| {
            write_re_var_csv(w, &report.scan)
        })?;
        art.write("uncertainty_pairs.csv", |w| {
            write_pairs_csv(w, &report.pairs)
        })?;
    }
    if cfg.wants(Format::Json, &defaults) {
        art.write_json("uncertainty_summary.json", &summary)?;
    }
    Ok(json!({ "grid": grid, "summary": summary }))
}

pub fn verify(
    cfg: &RunConfig,
    art: &mut Artifacts,
) -> Result<(serde_json::Value, Vec<String>), CliError> {
    let mut check = if cfg.quick {
        CheckConfig::quick(cfg.experiment.clone())
    } else {
        CheckConfig::full(cfg.experiment.clone())
    };
    check.nx = cfg.grid.nx;
    check.nz = cfg.grid.nz;
    if let Some(n) = cfg.ensemble.n_trajectories {
        check.n_trajectories = n;
    }
    if let Some(s) = cfg.verify.seed {
        check.seed = s;
    }
    check.tolerance_scale = cfg.verify.tolerance_scale;
    let report = run_all(&check)?;
    for o in &report.outcomes {
        println!("{}", format_outcome(o));
    }
    if cfg.wants(Format::Json, &[Format::Json]) {
        art.write_json("verify_report.json", &report)?;
    }
    let failures: Vec<String> = report.failures().map(|o| o.id.clone()).collect();
    let stamps = json!({
        "passed": report.passed(),
        "checks": report.outcomes.len(),
        "failures": failures,
    });
    Ok((stamps, failures))
}
