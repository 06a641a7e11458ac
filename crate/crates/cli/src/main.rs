//! `e2cp`: command-line driver for pairwise-constraint propagation,
//! constrained spectral clustering, and cross-source retrieval.
//! Exit codes: 0 success, 1 numerical failure, 2 input or config error.

mod cluster;
mod config;
mod inputs;
mod propagate;
mod retrieve;
mod synth;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Core(e2cp::Error),
    Config(String),
}

impl From<e2cp::Error> for CliError {
    fn from(e: e2cp::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "e2cp",
    version,
    about = "Pairwise-constraint propagation: constrained spectral clustering and cross-source ranking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run clustering experiments and report the adjusted Rand index.
    Cluster(config::CommonArgs),
    /// Propagate training constraints across two sources and report MAP.
    Retrieve(config::CommonArgs),
    /// Propagate constraints and write the score matrix.
    Propagate(config::CommonArgs),
    /// Generate a synthetic dataset plus a four-constraint demo file.
    Synth(config::CommonArgs),
}

type Runner = fn(&config::RunConfig) -> Result<(), CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, args, runner): (&str, _, Runner) =
        match &cli.command {
            Command::Cluster(a) => ("cluster", a, cluster::run),
            Command::Retrieve(a) => ("retrieve", a, retrieve::run),
            Command::Propagate(a) => ("propagate", a, propagate::run),
            Command::Synth(a) => ("synth", a, synth::run),
        };
    let result = config::resolve(name, args).and_then(|cfg| {
        std::fs::create_dir_all(&cfg.out_dir).map_err(|e| {
            CliError::Config(format!("cannot create output directory {}: {e}", cfg.out_dir))
        })?;
        if cfg.jobs > 0 {
            // Ignore the error from a pool that already exists; only the
            // first initialization can win.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs)
                .build_global();
        }
        runner(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
