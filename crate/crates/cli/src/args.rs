use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use powertriad::config::KeyValues;
use powertriad::diagnostics::{DEFAULT_BALANCE_TOL, DEFAULT_DEGENERACY_TOL};

/// Power-regime diagnostics, optimal scaling and safe-zone maps for
/// scalar estimators.
///
/// Exit status: 0 safe or balanced estimator (and every non-diagnose
/// success), 1 runtime error, 2 usage error, 3 power-dominant estimator with
/// the coupling penalty present, 4 power-dominant estimator whose coupling
/// does not exceed half the MSE.
///
/// Settings resolve as: a --config file overrides command-line flags, which
/// override built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "powertriad", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report bias, error variance, power ratio, coupling and regime.
    Diagnose(Common),
    /// Certify the MSE-optimal scale t* of a candidate.
    Scale(Common),
    /// Run a scaling controller toward t*.
    Path(Common),
    /// Track a moving t* with exponential forgetting.
    Track(Common),
    /// Build the safe-zone maps.
    Map(Common),
    /// List or sample the synthetic problem zoo.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ZooAction {
    /// Print problem and estimator kinds.
    List,
    /// Write a generated `x,v` stream.
    Run(Box<Common>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true).map_err(anyhow::Error::msg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Left,
    Right,
}

impl std::str::FromStr for Which {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true).map_err(anyhow::Error::msg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Paired-sample CSV with header `x,v`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Zoo problem, e.g. `gaussian_shrinkage:signal=1,noise=1`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Zoo estimator, e.g. `amplifier:c=2`. Repeat for maps.
    #[arg(long)]
    pub estimator: Vec<String>,
    /// Controller file (`kind`, `eta`, `beta`, `t0`, `conv_tol`, `max_steps`).
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Scaling moments `ex2,ez2,exz` given directly.
    #[arg(long)]
    pub moments: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub balance_tol: Option<f64>,
    #[arg(long)]
    pub degeneracy_tol: Option<f64>,
    /// Forgetting factor for `track`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Map to print when writing to stdout.
    #[arg(long, value_enum)]
    pub which: Option<Which>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (a directory for `map`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; its entries override flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Settings after applying defaults, flags and the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub problem: Option<String>,
    pub estimators: Vec<String>,
    pub controller: Option<PathBuf>,
    pub moments: Option<String>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub balance_tol: f64,
    pub degeneracy_tol: f64,
    pub lambda: Option<f64>,
    pub which: Which,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 13] = [
    "input",
    "problem",
    "estimator",
    "controller",
    "moments",
    "samples",
    "seed",
    "balance_tol",
    "degeneracy_tol",
    "lambda",
    "which",
    "format",
    "out",
];

impl Common {
    pub fn resolve(self) -> Result<RunConfig> {
        let mut rc = RunConfig {
            input: self.input,
            problem: self.problem,
            estimators: self.estimator,
            controller: self.controller,
            moments: self.moments,
            samples: self.samples,
            seed: self.seed.unwrap_or(0),
            balance_tol: self.balance_tol.unwrap_or(DEFAULT_BALANCE_TOL),
            degeneracy_tol: self.degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_TOL),
            lambda: self.lambda,
            which: self.which.unwrap_or(Which::Right),
            format: self.format,
            out: self.out,
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let kv = KeyValues::parse(&text).with_context(|| format!("in {}", path.display()))?;
            kv.reject_unknown(&CONFIG_KEYS)
                .with_context(|| format!("in {}", path.display()))?;
            // relative paths inside the file are relative to the file
            let base = path.parent().unwrap_or(Path::new("."));
            let rel = |v: &str| base.join(v);
            if let Some(v) = kv.get("input") {
                rc.input = Some(rel(v));
            }
            if let Some(v) = kv.get("controller") {
                rc.controller = Some(rel(v));
            }
            if let Some(v) = kv.get("out") {
                rc.out = Some(rel(v));
            }
            if let Some(v) = kv.get("problem") {
                rc.problem = Some(v.to_owned());
            }
            if let Some(v) = kv.get("estimator") {
                rc.estimators = v.split(';').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
            }
            if let Some(v) = kv.get("moments") {
                rc.moments = Some(v.to_owned());
            }
            if let Some(v) = kv.parsed("samples")? {
                rc.samples = Some(v);
            }
            if let Some(v) = kv.parsed("seed")? {
                rc.seed = v;
            }
            if let Some(v) = kv.parsed("balance_tol")? {
                rc.balance_tol = v;
            }
            if let Some(v) = kv.parsed("degeneracy_tol")? {
                rc.degeneracy_tol = v;
            }
            if let Some(v) = kv.parsed("lambda")? {
                rc.lambda = Some(v);
            }
            if let Some(v) = kv.get("which") {
                rc.which = v.parse()?;
            }
            if let Some(v) = kv.get("format") {
                rc.format = Some(v.parse()?);
            }
        }
        if rc.balance_tol.is_nan() || rc.balance_tol < 0.0 {
            bail!("balance tolerance must be non-negative");
        }
        if rc.degeneracy_tol.is_nan() || rc.degeneracy_tol < 0.0 {
            bail!("degeneracy tolerance must be non-negative");
        }
        Ok(rc)
    }
}
