//! `pfield`: computations on hierarchical (p-adic) lattices from the
//! command line.
//!
//! Every run resolves one configuration (JSON file, overridden by flags,
//! over documented defaults), executes a single subcommand, writes CSV
//! data plus a JSON manifest with content hashes, and exits with a
//! contract code: 0 success, 1 configuration error, 2 numerical failure,
//! 3 capacity guard.

mod commands;
mod config;
mod error;
mod report;
mod selftest;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use pfield_core::exec::ExecMode;

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

/// Thread-count environment variable; unset means one worker per logical
/// core, `1` forces the sequential path.
const THREADS_ENV: &str = "PFIELD_THREADS";

#[derive(Parser)]
#[command(
    name = "pfield",
    version,
    about = "Field computations on hierarchical (p-adic) lattices",
    after_help = "Environment:\n  PFIELD_THREADS  worker threads (default: logical cores; 1 = sequential)\n\nExit codes:\n  0 success, 1 configuration error, 2 numerical failure, 3 capacity guard"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the kernel matrix A, centered W, quadratic form U, and the
    /// momentum diagonal
    Operator,
    /// Eigenvalues of U in ascending order
    Spectrum,
    /// Exact radial two-point profile of the free measure
    Propagator,
    /// Draw fields from the free measure
    Sample,
    /// Monte Carlo correlation at chosen sites
    Correlate {
        /// Comma-separated site indices
        #[arg(long, default_value = "0,1")]
        points: String,
    },
    /// Partition function estimate under the interacting measure
    Partition {
        /// Also estimate the Wick-rotated (oscillatory) ratio
        #[arg(long)]
        rotated: bool,
    },
    /// Exact perturbative orders against Monte Carlo residuals
    Perturb {
        /// Highest Taylor order
        #[arg(long, default_value_t = 2)]
        order: u64,
        /// Comma-separated sites for a correlation comparison
        #[arg(long)]
        points: Option<String>,
    },
    /// Minimize the Ginzburg-Landau energy from a seeded noisy start
    Minimize,
    /// Temperature sweep with symmetric +-0.1 initializations
    Sweep,
    /// Run the built-in invariant suite
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Operator => "operator",
            Command::Spectrum => "spectrum",
            Command::Propagator => "propagator",
            Command::Sample => "sample",
            Command::Correlate { .. } => "correlate",
            Command::Partition { .. } => "partition",
            Command::Perturb { .. } => "perturb",
            Command::Minimize => "minimize",
            Command::Sweep => "sweep",
            Command::Selftest => "selftest",
        }
    }
}

fn init_threads() -> Result<ExecMode, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(ExecMode::Parallel),
        Err(e) => Err(CliError::Config(vec![format!("{THREADS_ENV}: {e}")])),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(k) if k >= 2 => {
                // a pool may already exist when embedded in tests; the
                // output does not depend on the worker count either way
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
                Ok(ExecMode::Parallel)
            }
            Ok(1) => Ok(ExecMode::Sequential),
            _ => Err(CliError::Config(vec![format!(
                "{THREADS_ENV}: expected a positive thread count, got '{raw}'"
            )])),
        },
    }
}

fn run(cli: &Cli, started: Instant) -> Result<bool, CliError> {
    let mode = init_threads()?;
    let name = cli.command.name();
    let cfg = RunConfig::resolve(&cli.overrides, name)?;
    let setup = started.elapsed();
    let compute_started = Instant::now();
    let done = match &cli.command {
        Command::Operator => commands::operator(&cfg, mode)?,
        Command::Spectrum => commands::spectrum(&cfg, mode)?,
        Command::Propagator => commands::propagator(&cfg, mode)?,
        Command::Sample => commands::sample(&cfg, mode)?,
        Command::Correlate { points } => commands::correlate(&cfg, points, mode)?,
        Command::Partition { rotated } => commands::partition(&cfg, *rotated, mode)?,
        Command::Perturb { order, points } => {
            commands::perturb(&cfg, *order, points.as_deref(), mode)?
        }
        Command::Minimize => commands::minimize_cmd(&cfg, mode)?,
        Command::Sweep => commands::sweep(&cfg, mode)?,
        Command::Selftest => selftest::run(cfg.json)?,
    };
    let compute = compute_started.elapsed();
    report::emit(name, &cfg, &done, setup, compute)?;
    if let Some(msg) = &done.soft_error {
        eprintln!("error: {msg}");
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let started = Instant::now();
    // Usage mistakes are configuration errors (exit 1); clap's default exit
    // code of 2 is reserved here for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli, started) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
