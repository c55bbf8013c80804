//! `relfreq`: verification reports for the relative-frequency operator.
//!
//! Exit status is 0 when every check of the invoked command passes, 1 when
//! a check fails, and 2 for malformed input or parameters outside a
//! command's preconditions.

mod commands;
mod config;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{pick, FileConfig};

#[derive(Parser, Debug)]
#[command(
    name = "relfreq",
    version,
    about = "Exact and simulated checks of the quantum weak law of large numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Report format [default: json]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Master seed for every random choice [default: 1592651789]
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dense identity suite over random states and projectors.
    Verify(VerifyArgs),
    /// Ensemble-size thresholds and exact tails over a parameter grid.
    Bound(BoundArgs),
    /// Eigenvalues and multiplicities of the frequency operator.
    Spectrum(SpectrumArgs),
    /// Monte Carlo run compared with the exact tail.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Single-system dimension [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    /// Projector rank; 0 or d selects the extreme regime [default: 1]
    #[arg(long)]
    pub rank: Option<usize>,
    /// Largest number of copies [default: 8]
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Number of random instances [default: 20]
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Comma-separated probabilities in (0,1) [default: 0.5]
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Comma-separated tolerances [default: 0.1]
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Comma-separated confidence levels [default: 0.05]
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    /// Also write a plot-ready CSV of (N, tail, ceiling, omega).
    #[arg(long, value_name = "PATH")]
    pub series: Option<PathBuf>,
    /// Largest N in the series [default: 10000]
    #[arg(long = "series-n-max")]
    pub series_n_max: Option<u64>,
    /// Points per series [default: 40]
    #[arg(long = "series-points")]
    pub series_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Single-system dimension [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    /// Projector rank [default: 1]
    #[arg(long)]
    pub rank: Option<usize>,
    /// Number of copies [default: 3]
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Event probability in (0,1) [default: 0.5]
    #[arg(long)]
    pub p: Option<f64>,
    /// Copies per trial [default: 100]
    #[arg(long)]
    pub n: Option<u64>,
    /// Tolerance [default: 0.1]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of trials [default: 10000]
    #[arg(long)]
    pub r: Option<u64>,
    /// Confidence level for the threshold certificate [default: 0.05]
    #[arg(long)]
    pub omega: Option<f64>,
    /// Check every trial's post-measurement state against the dense operators.
    #[arg(long = "verify-bridging")]
    pub verify_bridging: bool,
    /// Write `trial, K, K/N` for every trial.
    #[arg(long = "trials-csv", value_name = "PATH")]
    pub trials_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Malformed input or a violated precondition (exit 2).
    Usage(String),
    /// A computation that should not fail did (exit 1).
    Internal(String),
}

impl From<relfreq::Error> for Failure {
    fn from(err: relfreq::Error) -> Self {
        use relfreq::Error::*;
        match err {
            Inconsistent { .. }
            | Diagonalization { .. }
            | ComplexExpectation { .. }
            | NotNormalized { .. }
            | MismatchedFamily(_) => Failure::Internal(err.to_string()),
            _ => Failure::Usage(err.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Usage(msg)
    }
}

/// Settings shared by every subcommand.
pub struct Common {
    pub seed: u64,
    pub format: Format,
}

/// A finished report and whether all of its checks passed.
pub struct Report {
    pub body: Vec<u8>,
    pub passed: bool,
}

fn resolve_format(flag: Option<Format>, file: &FileConfig) -> Result<Format, Failure> {
    let from_file = match file.string("format")?.as_deref() {
        None => None,
        Some("json") => Some(Format::Json),
        Some("csv") => Some(Format::Csv),
        Some(other) => return Err(Failure::Usage(format!("unknown format `{other}`"))),
    };
    Ok(pick(flag, from_file, Format::Json))
}

fn run(cli: Cli) -> Result<Report, Failure> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let common = Common {
        seed: pick(cli.seed, file.u64("seed")?, relfreq::mcsim::DEFAULT_SEED),
        format: resolve_format(cli.format, &file)?,
    };
    let output = cli.output.or(file.path("output")?);
    let report = match cli.command {
        Command::Verify(args) => commands::verify(&args, &file, &common)?,
        Command::Bound(args) => commands::bound(&args, &file, &common)?,
        Command::Spectrum(args) => commands::spectrum(&args, &file, &common)?,
        Command::Simulate(args) => commands::simulate(&args, &file, &common)?,
    };
    match output {
        Some(path) => fs::write(&path, &report.body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => io::stdout()
            .write_all(&report.body)
            .map_err(|e| Failure::Internal(format!("cannot write to stdout: {e}")))?,
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) if report.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("relfreq: one or more checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("relfreq: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("relfreq: {msg}");
            ExitCode::from(1)
        }
    }
}
