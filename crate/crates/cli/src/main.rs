mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Artifacts;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Built-in configuration used when `--config` is absent.
const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Parser)]
#[command(name = "cylspec", version, about = "Spectra of traveling-wave linearizations on truncated cylinders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (defaults to the built-in example).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit only this format, overriding `output.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Standing wave or front profile.
    Wave,
    /// Dispersion curves and sup Re of the essential spectrum.
    Essential,
    /// Eigenvalues near the configured shifts, with the realness check.
    Eigs,
    /// Eigenfunction decay fits and Gronwall verdicts.
    Decay,
    /// Periodic-in-z eigenvalues against the discrete dispersion set.
    DispersionCheck,
    /// Checks of the decay hypotheses on the potential.
    Hypotheses,
    /// Everything above in one report.
    Report,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => toml::from_str(DEFAULT_CONFIG).map_err(|e| CliError::Config(e.message().to_string()))?,
    };
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.formats = vec![f];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let dir = cfg.output.directory.clone();
    let out: Artifacts = match cli.command {
        Command::Wave => commands::cmd_wave(&cfg)?,
        Command::Essential => commands::cmd_essential(&cfg)?,
        Command::Eigs => commands::cmd_eigs(&cfg)?,
        Command::Decay => commands::cmd_decay(&cfg)?,
        Command::DispersionCheck => commands::cmd_dispersion_check(&cfg)?,
        Command::Hypotheses => commands::cmd_hypotheses(&cfg)?,
        Command::Report => {
            let (out, timings) = commands::cmd_report(&cfg)?;
            let map: serde_json::Map<String, serde_json::Value> = timings.into_iter().map(|(k, v)| (k.to_string(), v.into())).collect();
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("timings.json"), serde_json::to_string_pretty(&map)? + "\n")?;
            out
        }
    };
    out.write(&dir)?;
    for name in out.names() {
        println!("{}", dir.join(name).display());
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cylspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
