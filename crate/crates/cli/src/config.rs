//! Run configuration: a strict JSON document merged with command-line overrides.

use std::path::Path;

use num_complex::Complex64;
use qhydro::params::talbot_length;
use qhydro::trajectories::{EnsembleConfig, Integrator, Seeding};
use qhydro::wavefield::WaveJet;
use qhydro::{
    ExperimentConfig, GratingConfig, GridSpec, Longitudinal, NSlitWave, PhysicalParams, PlaneWave,
    WaveSource,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Pgm,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldKind {
    /// The closed-form field behind the configured grating.
    #[default]
    Grating,
    /// `exp(i κ x)`, for checks against a force-free flow.
    PlaneWave { kappa_per_m: f64 },
}

/// Grid block. Without explicit bounds the carpet window is used: `|x| <= N d / 2`,
/// `z` in `[0, talbot_periods z_T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    #[serde(default = "default_periods")]
    pub talbot_periods: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_min_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max_m: Option<f64>,
}

fn default_periods() -> f64 {
    6.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 1800,
            nz: 600,
            talbot_periods: default_periods(),
            x_min_m: None,
            x_max_m: None,
            z_min_m: None,
            z_max_m: None,
        }
    }
}

/// Ensemble block; unset entries take the standard values (100 uniform seeds, RK4,
/// `dz = z_T / 2000`, out to `6 z_T`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeding: Option<Seeding>,
    /// Explicit seeds; replaces `n_trajectories` and `seeding`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_start_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_end_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dz_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyBlock {
    #[serde(default)]
    pub longitudinal: Longitudinal,
    /// Seed pairs in units of the pitch; defaults to `[[0.24, 0.26]]`.
    #[serde(default = "default_pairs")]
    pub pairs_d: Vec<[f64; 2]>,
}

fn default_pairs() -> Vec<[f64; 2]> {
    vec![[0.24, 0.26]]
}

impl Default for UncertaintyBlock {
    fn default() -> Self {
        Self {
            longitudinal: Longitudinal::default(),
            pairs_d: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    /// Multiplies every upper error bound of the suite.
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            tolerance_scale: 1.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub field: FieldKind,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub uncertainty: UncertaintyBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    /// PGM tone mapping exponent.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Relative density below which nodes are masked.
    #[serde(default = "default_eps")]
    pub eps_rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
    #[serde(default)]
    pub quick: bool,
}

fn default_gamma() -> f64 {
    qhydro::export::DEFAULT_GAMMA
}

fn default_eps() -> f64 {
    qhydro::DEFAULT_EPS_RHO
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

/// Flags that override entries of the JSON config.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    #[arg(long, global = true)]
    pub nz: Option<usize>,
    #[arg(long, global = true)]
    pub talbot_periods: Option<f64>,
    #[arg(long, global = true)]
    pub n_slits: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub n_trajectories: Option<usize>,
    #[arg(long, global = true, value_parser = parse_integrator)]
    pub integrator: Option<Integrator>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, value_parser = parse_longitudinal)]
    pub longitudinal: Option<Longitudinal>,
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
}

fn parse_integrator(s: &str) -> Result<Integrator, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| "expected euler or rk4".into())
}

fn parse_longitudinal(s: &str) -> Result<Longitudinal, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| "expected included or omitted".into())
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flags; `--quick` shrinks the default grid and ensemble.
    pub fn apply(&mut self, o: &Overrides, quick: bool, formats: &[Format]) {
        if quick {
            self.quick = true;
        }
        if self.quick && self.grid == GridConfig::default() {
            self.grid.nx = 450;
            self.grid.nz = 150;
        }
        if self.quick && self.ensemble.n_trajectories.is_none() && self.ensemble.seeds_m.is_none() {
            self.ensemble.n_trajectories = Some(20);
        }
        if let Some(v) = o.nx {
            self.grid.nx = v;
        }
        if let Some(v) = o.nz {
            self.grid.nz = v;
        }
        if let Some(v) = o.talbot_periods {
            self.grid.talbot_periods = v;
        }
        if let Some(v) = o.n_slits {
            self.experiment.n_slits = v;
        }
        if let Some(v) = o.n_trajectories {
            self.ensemble.n_trajectories = Some(v);
            self.ensemble.seeds_m = None;
        }
        if let Some(v) = o.integrator {
            self.ensemble.integrator = Some(v);
        }
        if let Some(v) = o.gamma {
            self.gamma = v;
        }
        if let Some(v) = o.longitudinal {
            self.uncertainty.longitudinal = v;
        }
        if let Some(v) = o.tolerance_scale {
            self.verify.tolerance_scale = v;
        }
        if !formats.is_empty() {
            let mut f = formats.to_vec();
            f.sort();
            f.dedup();
            self.formats = Some(f);
        }
    }

    pub fn wants(&self, f: Format, default: &[Format]) -> bool {
        match &self.formats {
            Some(list) => list.contains(&f),
            None => default.contains(&f),
        }
    }

    pub fn physical(&self) -> Result<PhysicalParams, CliError> {
        Ok(self.experiment.physical()?)
    }

    pub fn grating(&self) -> Result<GratingConfig, CliError> {
        Ok(self.experiment.grating()?)
    }

    pub fn resolve_grid(&self) -> Result<GridSpec, CliError> {
        let p = self.physical()?;
        let g = self.grating()?;
        let carpet = GridSpec::carpet(
            &p,
            &g,
            self.grid.talbot_periods,
            self.grid.nx.max(2),
            self.grid.nz.max(2),
        )?;
        let c = &self.grid;
        let (z_min, z_max) = (
            c.z_min_m.unwrap_or(carpet.z_min),
            c.z_max_m.unwrap_or(carpet.z_max),
        );
        let z_max = if c.nz == 1 && c.z_max_m.is_none() {
            z_min
        } else {
            z_max
        };
        Ok(GridSpec::new(
            c.x_min_m.unwrap_or(carpet.x_min),
            c.x_max_m.unwrap_or(carpet.x_max),
            c.nx,
            z_min,
            z_max,
            c.nz,
        )?)
    }

    pub fn resolve_ensemble(&self) -> Result<EnsembleConfig, CliError> {
        let p = self.physical()?;
        let g = self.grating()?;
        let mut e = EnsembleConfig::standard(&p, &g)?;
        let b = &self.ensemble;
        if let Some(v) = b.n_trajectories {
            e.n_trajectories = v;
        }
        if let Some(v) = &b.seeds_m {
            e.n_trajectories = v.len();
        }
        if let Some(v) = b.seeding {
            e.seeding = v;
        }
        if let Some(v) = b.z_start_m {
            e.z_start = v;
        }
        if let Some(v) = b.z_end_m {
            e.z_end = v;
        }
        if let Some(v) = b.integrator {
            e.integrator = v;
        }
        if let Some(v) = b.dz_m {
            e.dz = v;
        }
        if let Some(v) = b.record_every {
            e.record_every = v;
        }
        e.validate()?;
        Ok(e)
    }

    pub fn talbot_length(&self) -> Result<f64, CliError> {
        Ok(talbot_length(
            self.experiment.pitch_m,
            self.experiment.lambda_m,
        )?)
    }

    pub fn source(&self) -> Result<Source, CliError> {
        let p = self.physical()?;
        Ok(match self.field {
            FieldKind::Grating => Source::Grating(NSlitWave::new(&p, &self.grating()?)),
            FieldKind::PlaneWave { kappa_per_m } => {
                if !kappa_per_m.is_finite() {
                    return Err(CliError::Config("plane-wave kappa must be finite".into()));
                }
                Source::Plane(PlaneWave::new(&p, kappa_per_m))
            }
        })
    }
}

/// The configured field, evaluated through [`WaveSource`].
#[derive(Debug, Clone)]
pub enum Source {
    Grating(NSlitWave),
    Plane(PlaneWave),
}

impl WaveSource for Source {
    fn params(&self) -> &PhysicalParams {
        match self {
            Source::Grating(w) => w.params(),
            Source::Plane(w) => w.params(),
        }
    }

    fn psi(&self, x: f64, z: f64) -> Complex64 {
        match self {
            Source::Grating(w) => w.psi(x, z),
            Source::Plane(w) => w.psi(x, z),
        }
    }

    fn jet(&self, x: f64, z: f64) -> WaveJet {
        match self {
            Source::Grating(w) => w.jet(x, z),
            Source::Plane(w) => w.jet(x, z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            r#"{"colour": 1}"#,
            r#"{"grid": {"nx": 2, "nz": 1, "dx": 3}}"#,
            r#"{"field": {"kind": "plane_wave", "kappa_per_m": 1, "extra": 0}}"#,
            r#"{"ensemble": {"steps": 4}}"#,
            r#"{"verify": {"tolerance": 2}}"#,
            r#"{"field": {"kind": "laser"}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_win_and_quick_shrinks() {
        let mut c: RunConfig = serde_json::from_str(r#"{"grid": {"nx": 10, "nz": 4}}"#).unwrap();
        let o = Overrides {
            nx: Some(12),
            ..Default::default()
        };
        c.apply(&o, true, &[Format::Json, Format::Csv, Format::Json]);
        assert_eq!((c.grid.nx, c.grid.nz), (12, 4));
        assert_eq!(c.formats, Some(vec![Format::Csv, Format::Json]));
        assert_eq!(c.ensemble.n_trajectories, Some(20));
        let mut d = RunConfig::default();
        d.apply(&Overrides::default(), true, &[]);
        assert_eq!((d.grid.nx, d.grid.nz), (450, 150));
    }

    #[test]
    fn single_slice_grid() {
        let c: RunConfig = serde_json::from_str(r#"{"grid": {"nx": 2, "nz": 1}}"#).unwrap();
        let g = c.resolve_grid().unwrap();
        assert_eq!((g.nx, g.nz, g.z_min, g.z_max), (2, 1, 0.0, 0.0));
    }
}
