use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Hyperbolicity verdict, splitting projection and dichotomy constants
    Analyze,
    /// Green's function samples by Cesàro quadrature (CSV)
    Green,
    /// Splitting projection with oracle discrepancies
    Project,
    /// Bounded mild solution for a forcing (CSV) with residual report
    Solve,
    /// Spectral and growth bounds
    Bounds,
    /// Torus identities and the Cesàro resolvent sum
    Torus,
    /// Annulus scan of (zI - T_2pi)^-1 (CSV)
    Scan,
}

#[derive(Debug, Parser)]
#[command(name = "dichotomy", version, about = "Exponential dichotomy analysis of matrix semigroups")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Generator in matrix JSON: {"n": int, "re": [[...]], "im": [[...]]}
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Truncation S of the finest Cesàro ladder step
    #[arg(long = "trunc-S")]
    pub trunc_s: Option<f64>,
    /// Grid spacing h (quadrature lattice, or time grid for `solve`)
    #[arg(long = "grid-h")]
    pub grid_h: Option<f64>,
    /// Fejér parameter N of the finest ladder step
    #[arg(long = "fejer-N")]
    pub fejer_n: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// JSON file with the same keys as the flags; flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Forcing for `solve` as grid-function CSV
    #[arg(long)]
    pub forcing: Option<PathBuf>,
}

/// Config file schema. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    #[serde(rename = "trunc-S")]
    pub trunc_s: Option<f64>,
    #[serde(rename = "grid-h")]
    pub grid_h: Option<f64>,
    #[serde(rename = "fejer-N")]
    pub fejer_n: Option<f64>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub forcing: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub alpha: f64,
    pub rho: f64,
    pub p: f64,
    pub trunc_s: Option<f64>,
    pub grid_h: Option<f64>,
    pub fejer_n: Option<f64>,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub forcing: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self, Failure> {
        let file = match &cli.config {
            Some(path) => load_file_config(path)?,
            None => FileConfig::default(),
        };
        let command = cli
            .command
            .or(file.command)
            .ok_or_else(|| Failure::contract("no command given (analyze, green, project, solve, bounds, torus, scan)"))?;
        let input = cli
            .input
            .or(file.input)
            .ok_or_else(|| Failure::contract("missing --input: the generator matrix JSON is required"))?;
        Ok(Self {
            command,
            input,
            output: cli.output.or(file.output),
            alpha: cli.alpha.or(file.alpha).unwrap_or(0.0),
            rho: cli.rho.or(file.rho).unwrap_or(0.0),
            p: cli.p.or(file.p).unwrap_or(2.0),
            trunc_s: cli.trunc_s.or(file.trunc_s),
            grid_h: cli.grid_h.or(file.grid_h),
            fejer_n: cli.fejer_n.or(file.fejer_n),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            tolerance: cli.tolerance.or(file.tolerance),
            forcing: cli.forcing.or(file.forcing),
        })
    }
}

fn load_file_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::contract(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::contract(format!("config file {}: {e}", path.display())))
}
