//! `jslol` — spectral super-resolution from the command line.
//!
//! The verbs compose a simulate → train → reconstruct → evaluate
//! pipeline over one shared JSON config; `baselines` adds the reference
//! methods and `demo` chains everything on a seeded synthetic scene.
//!
//! Contract highlights:
//! * exit codes: 0 success, 2 input validation, 3 solver failure,
//!   4 filesystem trouble;
//! * every failure prints a single `error: <reason>` line on stderr;
//! * diagnostics go to stderr through the logger, tuned by the
//!   `SSR_LOG_LEVEL` env var (error|warn|info|debug);
//! * identical config + seed ⇒ byte-identical artifacts.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use jslol_core::error::{Error, Result};

use crate::config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "jslol",
    version,
    about = "Coupled-dictionary spectral super-resolution"
)]
struct Cli {
    /// JSON run config; flag values override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed for every randomized stage (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Artifact directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Cap the solver worker-thread pool (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Train with the historical shrink-threshold pairing instead of
    /// the weight-consistent defaults.
    #[arg(long, global = true)]
    strict_paper_thresholds: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project the narrowband cube onto broad channels and write the split manifest.
    Simulate,
    /// Learn the coupled dictionary pair on the overlap strip.
    Train,
    /// Predict narrowband spectra outside the overlap with the learned pair.
    Reconstruct,
    /// Score a reconstruction: spectra plus optional classification and unmixing.
    Evaluate {
        /// Also write the report as a flat one-row CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Run the reference methods and write a comparison table.
    Baselines,
    /// Generate a seeded synthetic scene and run the whole pipeline on it.
    Demo,
}

fn main() {
    let cli = Cli::parse();
    init_logging();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool already initialized: {e}");
        }
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {}", one_line(&e));
        std::process::exit(exit_code(&e));
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.resolve(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        strict_thresholds: cli.strict_paper_thresholds,
    });
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&config),
        Command::Train => commands::cmd_train(&config),
        Command::Reconstruct => commands::cmd_reconstruct(&config),
        Command::Evaluate { csv } => commands::cmd_evaluate(&config, *csv),
        Command::Baselines => commands::cmd_baselines(&config),
        Command::Demo => commands::cmd_demo(&config),
    }
}

/// Map the error groups onto the exit-code contract.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Shape(_) | Error::Parse { .. } => 2,
        Error::NotSpd(_) | Error::SvdNoConvergence { .. } | Error::Divergence(_) => 3,
        Error::Io { .. } => 4,
    }
}

/// Error lines must stay machine-parsable: exactly one line.
fn one_line(e: &Error) -> String {
    e.to_string().replace(['\n', '\r'], " ")
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SSR_LOG_LEVEL", "info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
}
