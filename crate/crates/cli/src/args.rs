//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ehmm_core::ExpectileLevel;

const INPUT_HELP: &str = "\
Input files are wide CSVs: a header row whose first column holds ISO-8601 dates
(YYYY-MM-DD) followed by one column of daily closing prices per asset. Empty
cells and NA mark missing prices. Returns 100·ln(P_t/P_(t-1)) are computed per
asset and then restricted to the dates every selected asset has. With
--returns the columns already hold returns, the first column is a free-form
row label and rows with a missing value are dropped. Long-format files are not
recognised.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "ehmm", version, about = "Expectile hidden Markov regression", after_help = INPUT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a K-state model at one expectile level.
    Fit(FitArgs),
    /// Fit a grid of state counts and levels and tabulate AIC, BIC and ICL.
    Select(SelectArgs),
    /// Write the most likely state and the smoothed probabilities per date.
    Decode(DecodeArgs),
    /// Parametric-bootstrap standard errors for a saved fit.
    Bootstrap(BootstrapArgs),
    /// Summary statistics of the return series.
    Describe(DescribeArgs),
    /// Draw one dataset from a benchmark scenario.
    Simulate(SimulateArgs),
    /// Monte Carlo study of bias, spread and state recovery.
    #[command(name = "mc-study")]
    McStudy(McStudyArgs),
    /// Re-run the command recorded in a report's manifest.
    Replay(ReplayArgs),
}

pub fn parse_tau(s: &str) -> Result<ExpectileLevel, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    ExpectileLevel::new(v).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Wide CSV of prices (or returns with --returns).
    #[arg(long)]
    pub data: PathBuf,
    /// Column modelled as the response.
    #[arg(long)]
    pub response: String,
    /// Covariate columns, comma separated or repeated; default all other columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// The columns already hold returns.
    #[arg(long)]
    pub returns: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    /// TOML file with a [fit] table of estimation settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random EM starts.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// EM stopping threshold on the absolute log-likelihood change.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Expectile level in (0, 1).
    #[arg(long, value_parser = parse_tau)]
    pub tau: Option<ExpectileLevel>,
    /// Number of hidden states.
    #[arg(long)]
    pub states: Option<usize>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Expectile levels (repeatable or comma separated).
    #[arg(long, value_parser = parse_tau, value_delimiter = ',')]
    pub tau: Vec<ExpectileLevel>,
    #[arg(long, default_value_t = 1)]
    pub kmin: usize,
    #[arg(long, default_value_t = 4)]
    pub kmax: usize,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    /// Report written by `ehmm fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// The data file the fit was estimated on.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    /// Match each refit's states to the estimate by coefficient and scale distance.
    Nearest,
    /// Keep each refit's ascending-scale labels.
    Scale,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    /// Report written by `ehmm fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// The data file the fit was estimated on.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    /// Bootstrap seed; defaults to the seed of the fit.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random starts per refit (the estimate is always used as an extra start).
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long, value_enum, default_value_t = AlignmentArg::Nearest)]
    pub alignment: AlignmentArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DescribeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// The columns already hold returns.
    #[arg(long)]
    pub returns: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Standard normal errors.
    Gaussian,
    /// Skew-t errors with 5 degrees of freedom and skewness parameter 2.
    Skewt,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Series length.
    #[arg(long, default_value_t = 500)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct McStudyArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Series length.
    #[arg(long, default_value_t = 500)]
    pub t: usize,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    /// Expectile levels; default 0.1, 0.25, 0.5, 0.75, 0.9.
    #[arg(long, value_parser = parse_tau, value_delimiter = ',')]
    pub tau: Vec<ExpectileLevel>,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Any JSON report written by this tool.
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
