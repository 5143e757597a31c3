//! Run configuration: flags, `GAPSCOPE_*` environment variables and an
//! optional TOML file, in that order of precedence.

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, ValueEnum};
use gapscope::Frequency;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Parameters shared by all subcommands. Every field is optional so that
/// unset flags fall through to the config file and then to the
/// subcommand's defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Coupling λ > 0.
    #[arg(long, env = "GAPSCOPE_LAMBDA", global = true)]
    pub lambda: Option<f64>,
    /// Frequency: golden, silver, a value in (0,1), p/q, or a quotient list [a1,a2,...].
    #[arg(long, env = "GAPSCOPE_ALPHA", global = true)]
    pub alpha: Option<String>,
    /// Energy grid step.
    #[arg(long, env = "GAPSCOPE_GRID", global = true)]
    pub grid: Option<f64>,
    /// Truncation size for IDS sections.
    #[arg(long, env = "GAPSCOPE_N", global = true)]
    pub n: Option<usize>,
    /// Iteration count (product length).
    #[arg(long, env = "GAPSCOPE_ITERS", global = true)]
    pub iters: Option<usize>,
    /// Number of sampled phases.
    #[arg(long, env = "GAPSCOPE_PHASES", global = true)]
    pub phases: Option<usize>,
    #[arg(long, env = "GAPSCOPE_SEED", global = true)]
    pub seed: Option<u64>,
    /// Largest gap label |k|.
    #[arg(long, env = "GAPSCOPE_KMAX", global = true)]
    pub kmax: Option<i64>,
    /// Energy.
    #[arg(long = "E", env = "GAPSCOPE_E", global = true, allow_negative_numbers = true)]
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    /// Imaginary part of the phase for the complexified cocycle.
    #[arg(long, env = "GAPSCOPE_EPSILON", global = true)]
    pub epsilon: Option<f64>,
    /// Perturbation size for kam-step.
    #[arg(long, env = "GAPSCOPE_NORM", global = true)]
    pub norm: Option<f64>,
    /// Convergent denominator for kam-step.
    #[arg(long, env = "GAPSCOPE_QNEXT", global = true)]
    pub qnext: Option<u64>,
    /// Off-diagonal of the parabolic constant for kam-step.
    #[arg(long, env = "GAPSCOPE_D", global = true, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Largest denominator for butterfly.
    #[arg(long, env = "GAPSCOPE_QMAX", global = true)]
    pub qmax: Option<i64>,
    /// Output directory for artifacts; stdout when absent.
    #[arg(long, env = "GAPSCOPE_OUT", global = true)]
    pub out: Option<PathBuf>,
    /// Format written to stdout when no output directory is given.
    #[arg(long, env = "GAPSCOPE_FORMAT", global = true)]
    pub format: Option<Format>,
    #[arg(long, env = "GAPSCOPE_CACHE_DIR", global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Neither read nor write the result cache.
    #[arg(long, env = "GAPSCOPE_NO_CACHE", global = true)]
    #[serde(default)]
    pub no_cache: bool,
}

/// Fully resolved configuration. Serialized in field order, it is both the
/// config echo in artifacts and the cache key input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub lambda: f64,
    pub alpha: String,
    pub grid: f64,
    pub n: usize,
    pub iters: usize,
    pub phases: usize,
    pub seed: u64,
    pub kmax: i64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub epsilon: f64,
    pub norm: f64,
    pub qnext: u64,
    pub d: f64,
    pub qmax: i64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn frequency(&self) -> Result<Frequency, CliError> {
        parse_alpha(&self.alpha)
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Defaults that depend on the subcommand.
fn defaults(sub: &str) -> RunConfig {
    let (grid, iters, phases, n) = match sub {
        "lyap" => (1e-3, 100_000, 32, 2000),
        "rot" => (1e-3, 100_000, 1, 2000),
        "ids" => (1e-2, 0, 8, 2000),
        "spectrum" | "gaps" => (1e-3, 2000, 8, 10_000),
        "dry-check" => (1e-4, 20_000, 4, 20_000),
        "duality" => (1e-3, 10_000, 4, 10_000),
        _ => (1e-3, 2000, 4, 2000),
    };
    RunConfig {
        subcommand: sub.to_string(),
        lambda: if sub == "duality" { 2.0 } else if sub == "butterfly" { 1.0 } else { 0.5 },
        alpha: "golden".into(),
        grid,
        n,
        iters,
        phases,
        seed: 0,
        kmax: 5,
        energy: 0.0,
        epsilon: 0.0,
        norm: 1e-4,
        qnext: 8,
        d: 0.3,
        qmax: 30,
        out: None,
        format: Format::Json,
        cache_dir: None,
    }
}

pub fn load_file(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
}

/// Merges flags and environment (already combined by clap) over the file
/// and defaults. Returns the config and banner lines describing where each
/// explicitly set value came from.
pub fn resolve(
    sub: &str,
    cli: &Params,
    file: &Params,
    matches: &ArgMatches,
) -> Result<(RunConfig, Vec<String>), CliError> {
    let mut cfg = defaults(sub);
    let mut banner = Vec::new();

    macro_rules! merge {
        ($field:ident, $id:literal) => {
            let source = matches.value_source($id);
            if let Some(v) = cli.$field.clone() {
                let origin = match source {
                    Some(ValueSource::EnvVariable) => "environment",
                    _ => "flag",
                };
                let env = env_name($id);
                let shadowed = match std::env::var(&env) {
                    Ok(e) if source == Some(ValueSource::CommandLine) => Some(e),
                    _ => None,
                };
                if let Some(e) = shadowed {
                    banner.push(format!("{}: flag {:?} overrides {}={}", $id, v, env, e));
                } else if let Some(f) = file.$field.clone() {
                    banner.push(format!("{}: {} {:?} overrides config file {:?}", $id, origin, v, f));
                } else {
                    banner.push(format!("{}: {:?} ({})", $id, v, origin));
                }
                cfg.$field = v.into();
            } else if let Some(f) = file.$field.clone() {
                banner.push(format!("{}: {:?} (config file)", $id, f));
                cfg.$field = f.into();
            }
        };
    }
    merge!(lambda, "lambda");
    merge!(alpha, "alpha");
    merge!(grid, "grid");
    merge!(n, "n");
    merge!(iters, "iters");
    merge!(phases, "phases");
    merge!(seed, "seed");
    merge!(kmax, "kmax");
    merge!(energy, "energy");
    merge!(epsilon, "epsilon");
    merge!(norm, "norm");
    merge!(qnext, "qnext");
    merge!(d, "d");
    merge!(qmax, "qmax");
    merge!(format, "format");
    cfg.out = cli.out.clone().or_else(|| file.out.clone());
    cfg.cache_dir = cli.cache_dir.clone().or_else(|| file.cache_dir.clone());
    if cli.no_cache || file.no_cache {
        cfg.cache_dir = None;
    } else if cfg.cache_dir.is_none() {
        cfg.cache_dir = default_cache_dir();
    }
    validate(&cfg)?;
    Ok((cfg, banner))
}

fn env_name(id: &str) -> String {
    match id {
        "energy" => "GAPSCOPE_E".into(),
        _ => format!("GAPSCOPE_{}", id.to_uppercase()),
    }
}

fn default_cache_dir() -> Option<PathBuf> {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")))?;
    Some(base.join("gapscope"))
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(CliError::Usage(format!("--lambda must be positive (got {})", cfg.lambda)));
    }
    if !(cfg.grid > 0.0) {
        return Err(CliError::Usage(format!("--grid must be positive (got {})", cfg.grid)));
    }
    if cfg.phases == 0 {
        return Err(CliError::Usage("--phases must be at least 1".into()));
    }
    if cfg.kmax < 1 {
        return Err(CliError::Usage(format!("--kmax must be at least 1 (got {})", cfg.kmax)));
    }
    parse_alpha(&cfg.alpha)?;
    Ok(())
}

/// `golden`, `silver`, `p/q`, `[a1,a2,...]` or a decimal in (0, 1).
pub fn parse_alpha(spec: &str) -> Result<Frequency, CliError> {
    let s = spec.trim();
    let bad = |why: String| CliError::Usage(format!("--alpha {s}: {why}"));
    match s {
        "golden" => return Ok(Frequency::golden()),
        "silver" => return Ok(Frequency::silver()),
        _ => {}
    }
    if let Some(list) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let q: Vec<u64> = list
            .split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        return Frequency::from_quotients(&q).map_err(|e| bad(e.to_string()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad("bad numerator".into()))?;
        let q: i64 = q.trim().parse().map_err(|_| bad("bad denominator".into()))?;
        return Frequency::rational(p, q).map_err(|e| bad(e.to_string()));
    }
    let x: f64 = s.parse().map_err(|_| bad("expected golden, silver, p/q, [a1,...] or a number".into()))?;
    Frequency::expand(x, 40).map_err(|e| bad(e.to_string()))
}
