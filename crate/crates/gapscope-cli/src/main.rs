//! `gapscope`: spectra, gaps and cocycles of the almost Mathieu operator
//! from the command line.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cache;
mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use config::{Format, Params, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("inconsistency: {0}")]
    Inconsistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Inconsistency(_) | CliError::Io(_) => 1,
        }
    }
}

/// Rendered output of one run. `violation` names a failed invariant; the
/// artifacts are still written, but the run exits with status 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub json: String,
    pub csv: String,
    pub violation: Option<String>,
}

#[derive(Debug, Parser)]
#[command(name = "gapscope", version, about = "Spectral gaps and cocycles of the almost Mathieu operator")]
struct Cli {
    /// TOML file with default parameters (same keys as the long flags).
    #[arg(long, env = "GAPSCOPE_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Lyapunov exponent at one energy, optionally with complexified phase.
    Lyap,
    /// Fibered rotation number at one energy.
    Rot,
    /// Integrated density of states over an energy grid.
    Ids,
    /// Grid approximation of the spectrum.
    Spectrum,
    /// Spectral gaps with their labels.
    Gaps,
    /// Checks that every gap label up to --kmax is open.
    DryCheck,
    /// Compares the spectrum at lambda with the rescaled spectrum at 1/lambda.
    Duality,
    /// One Newton step of the KAM scheme and its contraction table.
    KamStep,
    /// Spectra of rational frequencies p/q with q up to --qmax.
    Butterfly,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Lyap => "lyap",
            Command::Rot => "rot",
            Command::Ids => "ids",
            Command::Spectrum => "spectrum",
            Command::Gaps => "gaps",
            Command::DryCheck => "dry-check",
            Command::Duality => "duality",
            Command::KamStep => "kam-step",
            Command::Butterfly => "butterfly",
        }
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapscope: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli, matches: &clap::ArgMatches) -> Result<(), CliError> {
    let sub = cli.command.name();
    let file = match &cli.config {
        Some(p) => config::load_file(p)?,
        None => Params::default(),
    };
    let (cfg, banner) = config::resolve(sub, &cli.params, &file, matches)?;
    let mut err = std::io::stderr().lock();
    writeln!(err, "gapscope {} {sub}", env!("CARGO_PKG_VERSION"))?;
    for line in &banner {
        writeln!(err, "  {line}")?;
    }
    writeln!(err, "  effective config: {}", cfg.echo())?;

    let key = cache::key(&cfg);
    let cached = cfg.cache_dir.as_deref().and_then(|d| cache::load(d, &key));
    let artifacts = match cached {
        Some(a) => {
            writeln!(err, "  cache hit {key}")?;
            a
        }
        None => {
            let a = commands::dispatch(&cfg)?;
            if let Some(dir) = &cfg.cache_dir {
                if let Err(e) = cache::store(dir, &key, &a) {
                    writeln!(err, "  warning: cache write to {} failed: {e}", dir.display())?;
                }
            }
            a
        }
    };
    drop(err);
    emit(&cfg, &artifacts)?;
    match artifacts.violation {
        Some(v) => Err(CliError::Inconsistency(v)),
        None => Ok(()),
    }
}

fn emit(cfg: &RunConfig, a: &Artifacts) -> Result<(), CliError> {
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.json", cfg.subcommand)), &a.json)?;
            std::fs::write(dir.join(format!("{}.csv", cfg.subcommand)), &a.csv)?;
        }
        None => {
            let body = match cfg.format {
                Format::Json => &a.json,
                Format::Csv => &a.csv,
            };
            std::io::stdout().lock().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}
