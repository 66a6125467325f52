//! Command-line front end. The binary only parses `std::env::args` and calls
//! [`run`].

mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{DataSource, RunConfig};
pub use report::{read_report, FoldReport, Report, REPORT_FILE};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_) => EXIT_CONFIG,
            Error::NonFinite(_) | Error::EigenFailure(_) | Error::MissingW(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "kdn", version, about = "Layer-wise HSIC networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate a network and write per-fold models plus report.json.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Eval(EvalArgs),
    /// Bandwidth search by kernel separation; writes the objective curve.
    Sigma(SigmaArgs),
    /// Tabulate the HSIC lower bound over a σ0 grid.
    Bounds(BoundsArgs),
    /// Render a layer's kernel matrix as a PGM image.
    Heatmap(HeatmapArgs),
    /// Write a synthetic dataset to CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct DataArgs {
    /// CSV path or `synthetic:spiral|random|adversarial`.
    #[arg(long)]
    pub data: Option<String>,
    /// Label column, by header name or 0-based index. Defaults to the last column.
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value lines or a JSON object; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub hsic_threshold: Option<f64>,
    #[arg(long)]
    pub max_layers: Option<usize>,
    #[arg(long)]
    pub rff_width: Option<usize>,
    /// grid_hsic_star or max_separation.
    #[arg(long)]
    pub sigma_strategy: Option<String>,
    /// Also write each layer's eigenvalues per fold.
    #[arg(long)]
    pub dump_spectra: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Optional JSON output with accuracy and per-layer metrics.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SigmaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Search interval `lo:hi`; defaults to [0.05, 20] × median distance.
    #[arg(long)]
    pub interval: Option<String>,
    #[arg(long, default_value = "sigma_curve.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Class sizes, comma separated.
    #[arg(long)]
    pub counts: String,
    #[arg(long)]
    pub sigma1: f64,
    /// Log-spaced `lo:hi:points`.
    #[arg(long, default_value = "1e-3:1:50")]
    pub sigma0_grid: String,
    #[arg(long, default_value_t = 1.0)]
    pub min_sq_dist: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
    /// signed or centered.
    #[arg(long, default_value = "signed")]
    pub gamma: String,
    #[arg(long, default_value = "bounds.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// 0 is the input kernel; defaults to the last layer.
    #[arg(long)]
    pub layer: Option<usize>,
    #[arg(long, default_value = "kernel.pgm")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// spiral, random or adversarial.
    #[arg(long)]
    pub name: String,
    /// Total number of samples.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (including the program name) and execute. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Train(a) => commands::train(&a).map(|_| ()),
        Command::Eval(a) => commands::eval(&a),
        Command::Sigma(a) => commands::sigma(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Heatmap(a) => commands::heatmap(&a),
        Command::Synth(a) => commands::synth(&a),
    }
}

pub use commands::train as cmd_train;
