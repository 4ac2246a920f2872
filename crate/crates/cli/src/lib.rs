//! Command-line front end for the `affinest` estimators.
//!
//! Three subcommands: `estimate` runs one iteration trace on a CSV sample,
//! `simulate` runs a Monte-Carlo configuration and writes summary files, and
//! `ellipses` emits the per-observation contour records used for plotting.

use std::io::Write;
use std::path::PathBuf;

use affinest::{Error, WeightScheme};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod ellipses;
pub mod estimate;
pub mod input;
pub mod simulate;

/// Environment variable selecting the worker count for `simulate` (`0` = all cores).
pub const THREADS_ENV: &str = "AFFINEST_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    TooManyFailures(String),
    #[error("ellipses need bivariate data, got p = {0}")]
    Dimension(usize),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::TooManyFailures(_) => 4,
            CliError::Dimension(_) => 5,
            CliError::Io(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DegenerateScatter { .. } | Error::Linalg(_) => CliError::Degenerate(msg),
            Error::TooManyFailures { .. } => CliError::TooManyFailures(msg),
            Error::NoConvergence(_) => CliError::Runtime(msg),
            Error::InvalidSample(_) => CliError::Parse(msg),
            Error::InvalidScheme(_)
            | Error::InvalidK { .. }
            | Error::EmptyInput
            | Error::ConfigInvalid(_) => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "affinest", version, about = "Affine equivariant multivariate L-estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate an L-estimator on a CSV sample
    Estimate(estimate::EstimateArgs),
    /// Run a Monte-Carlo study from a JSON configuration
    Simulate(simulate::SimulateArgs),
    /// Per-observation contour ellipses for bivariate data
    Ellipses(ellipses::EllipsesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeKind {
    L1,
    L2,
    Lk,
    Poisson,
    Scores,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Weight rule
    #[arg(long, value_enum, default_value_t = SchemeKind::L1)]
    pub scheme: SchemeKind,
    /// Number of innermost observations carrying weight
    #[arg(long, default_value_t = 15)]
    pub kn: usize,
    /// Order of the `lk` rule
    #[arg(long)]
    pub k: Option<usize>,
    /// Parameter of the `poisson` rule, in (0, 1)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated nonincreasing scores for the `scores` rule, one per observation
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub scores: Vec<f64>,
}

impl SchemeArgs {
    pub fn resolve(&self, n: usize) -> Result<WeightScheme, CliError> {
        let missing = |flag: &str| CliError::Config(format!("--scheme {:?} needs {flag}", self.scheme));
        let scheme = match self.scheme {
            SchemeKind::L1 => WeightScheme::TrimmedL1 { k_n: self.kn },
            SchemeKind::L2 => WeightScheme::RankWeightedL2 { k_n: self.kn },
            SchemeKind::Lk => WeightScheme::GeneralLk {
                k_n: self.kn,
                k: self.k.ok_or_else(|| missing("--k"))?,
            },
            SchemeKind::Poisson => WeightScheme::Poisson {
                lambda: self.lambda.ok_or_else(|| missing("--lambda"))?,
            },
            SchemeKind::Scores => {
                if self.scores.is_empty() {
                    return Err(missing("--scores"));
                }
                WeightScheme::CustomScores {
                    a: self.scores.clone(),
                }
            }
        };
        scheme.validate(n)?;
        Ok(scheme)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Json,
    Csv,
}

/// Runs a parsed command, writing its primary output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => estimate::run(&args, out),
        Command::Simulate(args) => simulate::run(&args, out),
        Command::Ellipses(args) => ellipses::run(&args, out),
    }
}

/// Sends `text` to `path`, or to `out` when no path is given.
pub(crate) fn emit(text: &str, path: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}
