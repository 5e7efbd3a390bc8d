mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Quantity;
use config::{Format, Overrides, RunConfig};
use error::CliError;
use output::Artifacts;

/// Talbot carpets, Bohmian ensembles, hydrodynamic fields and verification runs for
/// matter waves behind an N-slit grating.
#[derive(Debug, Parser)]
#[command(name = "qhydro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reduced grid and ensemble sizes.
    #[arg(long, global = true)]
    quick: bool,
    /// Artifact formats to write (repeatable); each command has its own default.
    #[arg(long = "format", global = true, value_enum)]
    formats: Vec<Format>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density of the interference carpet as PGM and CSV.
    Carpet,
    /// Bohmian trajectory ensemble.
    Trajectories,
    /// Gridded hydrodynamic quantities.
    Fields {
        /// Quantities to export (repeatable); all by default.
        #[arg(long = "quantity", value_enum)]
        quantities: Vec<Quantity>,
    },
    /// Complex-velocity variance scan and pairwise uncertainty products.
    Uncertainty,
    /// Runs every acceptance check; exit status 1 if any fails.
    Verify,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&cli.overrides, cli.quick, &cli.formats);
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(CliError::Config("gamma must be positive".into()));
    }
    if !(cfg.eps_rho > 0.0 && cfg.eps_rho < 1.0) {
        return Err(CliError::Config("eps_rho must lie in (0, 1)".into()));
    }
    let mut art = Artifacts::new(&cli.out)?;
    let (name, stamps, failures) = match &cli.command {
        Command::Carpet => ("carpet", commands::carpet(&cfg, &mut art)?, vec![]),
        Command::Trajectories => (
            "trajectories",
            commands::trajectories(&cfg, &mut art)?,
            vec![],
        ),
        Command::Fields { quantities } => (
            "fields",
            commands::fields(&cfg, quantities, &mut art)?,
            vec![],
        ),
        Command::Uncertainty => (
            "uncertainty",
            commands::uncertainty(&cfg, &mut art)?,
            vec![],
        ),
        Command::Verify => {
            let (s, f) = commands::verify(&cfg, &mut art)?;
            ("verify", s, f)
        }
    };
    art.finish(name, &cfg, stamps)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
