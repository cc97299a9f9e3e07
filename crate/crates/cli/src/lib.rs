//! Command-line front end: analyze a p-value table or run a simulation grid.

pub mod analyze;
pub mod input;
pub mod simulate;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use ordershape::lfdr::LfdrForm;
use ordershape::{CovariateDirection, Method};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "ordershape", version, about = "Covariate-ordered FDR control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one procedure on a TSV of p-values.
    Analyze(AnalyzeArgs),
    /// Run a simulation grid from a JSON config and write metrics.csv.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Smallest covariate is most promising.
    Ascending,
    Descending,
}

impl From<DirectionArg> for CovariateDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Ascending => CovariateDirection::Ascending,
            DirectionArg::Descending => CovariateDirection::Descending,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LfdrFormArg {
    Calibrated,
    Refined,
}

impl From<LfdrFormArg> for LfdrForm {
    fn from(f: LfdrFormArg) -> Self {
        match f {
            LfdrFormArg::Calibrated => LfdrForm::Calibrated,
            LfdrFormArg::Refined => LfdrForm::Refined,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct AnalyzeArgs {
    /// Tab-separated input with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "pvalue")]
    pub pvalue_col: String,
    /// Ordering covariate; without it the file order is the prior order.
    #[arg(long)]
    pub covariate_col: Option<String>,
    #[arg(long, value_enum, default_value_t = DirectionArg::Ascending)]
    pub covariate_direction: DirectionArg,
    #[arg(long, default_value_t = Method::OrderShape)]
    pub method: Method,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Contiguous bins with separate alternative densities.
    #[arg(long, default_value_t = 1)]
    pub bins: usize,
    /// One integer group label per data row; lower labels rank first.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LfdrFormArg::Calibrated)]
    pub lfdr_form: LfdrFormArg,
    /// EM iteration cap.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Treat an EM fit that reaches the iteration cap as a numerical failure.
    #[arg(long)]
    pub strict_convergence: bool,
    /// Recorded in summary.json; every procedure is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => analyze::run(&args),
        Command::Simulate(args) => simulate::run(&args),
    }
}
