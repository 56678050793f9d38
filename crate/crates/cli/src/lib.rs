//! `paraopt` command-line tool: bound sweeps, solves and experiment drivers
//! writing CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use experiments::ExperimentId;

/// Failure classes with stable exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration or unusable output directory.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("not converged: {0}")]
    NotConverged(String),
}

impl CliError {
    pub fn solver(e: paraopt::Error) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::NotConverged(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "paraopt", version, about = "Time-parallel optimal control of linear diffusive problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the convergence bound over a (sigma_hat, gamma_hat) grid; writes rho_star.csv.
    Bound(Overrides),
    /// Solve one control problem; writes solve_log.csv and summary.json.
    Solve(Overrides),
    /// Regenerate the data of one experiment.
    Experiment {
        #[arg(value_enum)]
        id: ExperimentId,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PARAOPT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("PARAOPT_THREADS must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(CliError::Config("PARAOPT_THREADS must be positive".into()));
    }
    // Fails only if the pool was already built (repeated calls in tests).
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("global thread pool already initialised");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Bound(o) => {
            let c = RunConfig::resolve(&o)?;
            let rho = commands::cmd_bound(&c)?;
            println!("max rho_star = {rho:e}");
        }
        Command::Solve(o) => {
            let c = RunConfig::resolve(&o)?;
            let log = commands::cmd_solve(&c)?;
            println!(
                "converged after {} outer / {} inner iterations, residual {:e}",
                log.outer_iterations(),
                log.total_inner_iterations(),
                log.residuals().last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Experiment { id, overrides } => {
            let c = RunConfig::resolve(&overrides)?;
            experiments::cmd_experiment(id, &c)?;
            println!("wrote {}", c.output.display());
        }
    }
    Ok(())
}

/// Parses `args` and runs the selected command, returning the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
