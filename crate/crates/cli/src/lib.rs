//! Batch experiment driver for the concentration-inequality laboratory.
//!
//! Every subcommand reads a TOML config (flags override its keys), runs one
//! experiment from `conclab-core`, and writes `results.csv`, SVG charts and a
//! `manifest.json` that lists every emitted file with its SHA-256 digest.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "CONCLAB_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "conclab", version, about = "Verification lab for uniform Hanson-Wright concentration inequalities")]
#[command(after_help = "Exit codes: 0 success, 1 failed check or i/o error, 2 configuration or usage error, 3 capacity or fit failure.\n\
The worker count is capped by CONCLAB_WORKERS; results.csv does not depend on it.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical tail of a quadratic-form supremum against the classical bounds.
    #[command(after_help = commands::tail::COLUMNS)]
    Tail(RunArgs),
    /// Covariance estimation with missing observations.
    #[command(name = "cov-missing", after_help = commands::cov_missing::COLUMNS)]
    CovMissing(RunArgs),
    /// Matrix Bernstein tails across effective ranks.
    #[command(after_help = commands::bernstein::COLUMNS)]
    Bernstein(RunArgs),
    /// Ising chaos tails, Glauber sampling and log-Sobolev constants.
    #[command(after_help = commands::ising::COLUMNS)]
    Ising(RunArgs),
    /// Analytics of the two-point law that breaks tail regularity.
    #[command(after_help = commands::counterexample::COLUMNS)]
    Counterexample(CounterexampleArgs),
    /// Exact-enumeration inequality suite.
    #[command(after_help = commands::checks::COLUMNS)]
    Checks(ChecksArgs),
    /// Verify the files listed in a run's manifest and print its summary.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config replicate count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn overrides(&self) -> config::Overrides {
        config::Overrides { seed: self.seed, reps: self.reps, out: self.out.clone() }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CounterexampleArgs {
    /// Two-point law parameters (comma separated).
    #[arg(long = "r", value_delimiter = ',', required = true)]
    pub r: Vec<f64>,
    /// Tail-regularity constant.
    #[arg(long = "A")]
    pub a: f64,
    /// Numbers of coordinates for the maximum moments (comma separated).
    #[arg(long = "n", value_delimiter = ',', default_value = "10")]
    pub n: Vec<usize>,
    /// Monte Carlo replicates per (r, n).
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ChecksArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run a fifth of the cases.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Output directory of an earlier run.
    #[arg(long = "in")]
    pub input: PathBuf,
}

/// Worker cap from the environment; unset, empty or zero means no cap.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&w| w > 0)
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_workers(argv, workers_from_env())
}

/// As [`run`] with an explicit worker cap.
pub fn run_with_workers<I, T>(argv: I, workers: Option<usize>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("conclab: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| commands::dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("conclab: {e}");
            e.exit_code()
        }
    }
}
