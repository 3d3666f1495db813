//! `simplex-kde`: Dirichlet kernel density estimation on the simplex from
//! the command line.
//!
//! Exit status: 0 when every check passes, 1 when a verification check
//! fails, 2 on usage or input errors.

mod commands;
mod output;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub const THREADS_ENV: &str = "SIMPLEX_KDE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "simplex-kde", version, about = "Dirichlet kernel density estimation on the simplex")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a share table and print a summary.
    Ingest(IngestArgs),
    /// Pair composition → LSCV bandwidth → density grid → HDR threshold.
    PairPipeline(PipelineArgs),
    /// Run a verification experiment and write a JSON-lines report.
    Verify(VerifyArgs),
    /// Write a synthetic composition series.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV with a header row, one date column and share columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the date column (default: the first column).
    #[arg(long)]
    pub date_column: Option<String>,
    /// Comma-separated share column names (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Reject rows whose shares do not sum to one.
    #[arg(long, conflicts_with = "renormalize")]
    pub strict: bool,
    /// Clip negative shares and divide each row by its sum (default).
    #[arg(long)]
    pub renormalize: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also write the summary as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// One-based share column indices i and j.
    #[arg(long, num_args = 2, value_names = ["I", "J"], required = true)]
    pub pair: Vec<usize>,
    /// Bandwidth grid lo:step:hi.
    #[arg(long, default_value = "0.01:0.01:0.50")]
    pub grid: String,
    /// Monte Carlo points for the cross-validation criterion.
    #[arg(long, default_value_t = 1000)]
    pub mc_points: usize,
    /// Monte Carlo points for the HDR threshold.
    #[arg(long, default_value_t = 10_000)]
    pub hdr_mc_points: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Lattice points per axis of the density grid.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Mse,
    Clt,
    Coverage,
    Norms,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Mse => "mse",
            Suite::Clt => "clt",
            Suite::Coverage => "coverage",
            Suite::Norms => "norms",
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub seed: u64,
    /// Replicates per setting (mse: 300, clt/coverage: 500).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Sample size of clt/coverage runs.
    #[arg(long)]
    pub n: Option<usize>,
    /// Latent autocorrelations of clt/coverage runs.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
    pub rho: Vec<f64>,
    /// Sample sizes of the mse run.
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Option<Vec<usize>>,
    /// Dimensions of the norms run.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Exponents q of the norms run.
    #[arg(long, value_delimiter = ',')]
    pub exponents: Option<Vec<f64>>,
    /// Decreasing bandwidths of the norms run.
    #[arg(long, value_delimiter = ',')]
    pub bandwidths: Option<Vec<f64>>,
    /// Report path (default: verify_<suite>.jsonl in the out directory).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Iid,
    Ar1,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Dirichlet shapes of all d + 1 parts, residual last.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shapes: Vec<f64>,
    /// Latent AR(1) coefficient (ar1 only).
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub enum Outcome {
    Pass,
    CheckFailed,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run(args: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut shown = args.clone();
    if let Some(first) = shown.first_mut() {
        *first = "simplex-kde".into();
    }
    let command_line = shown.join(" ");
    match commands::dispatch(&cli.command, &command_line) {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::CheckFailed) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn main() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(run(std::env::args().collect()))
}
