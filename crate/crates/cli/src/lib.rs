//! Configuration loading, command dispatch and artifact output for the
//! `gapkit` binary.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use clap::Parser;
use gapkit_core::model::ModelError;
use gapkit_core::stats::StatsError;
use gapkit_core::transfer::TransferError;
use gapkit_core::ulam::UlamError;
use serde::Serialize;
use thiserror::Error;

pub use artifacts::{Envelope, Summary};
pub use commands::{registry, Check, Command, CommandRegistry, Section};
pub use config::{load_config, parse_config, RunConfig};
pub use pipeline::Pipeline;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Run(_) => "run",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Run(_) | CliError::Io(_) => EXIT_INVALID,
        }
    }

    /// `{"error": {"kind": …, "message": …}, "exit_code": …}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            error: Inner<'a>,
            exit_code: i32,
        }
        let doc = Doc {
            error: Inner {
                kind: self.kind(),
                message: self.to_string(),
            },
            exit_code: self.exit_code(),
        };
        serde_json::to_string(&doc).expect("error document serializes")
    }
}

macro_rules! run_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Run(e.to_string())
            }
        }
    )*};
}
run_error!(ModelError, TransferError, UlamError, StatsError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gapkit",
    version,
    about = "Invariant densities, transfer operators and spectral gaps of randomly perturbed recurrences"
)]
pub struct Cli {
    /// One of: check, simulate, ulam, spectrum, marginals, decay, report.
    pub command: String,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; all available cores by default.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Resolve the configuration, run the command on a pool of the requested
/// size and write its artifacts.
pub fn execute(cli: &Cli) -> Result<Summary, CliError> {
    let command = registry().get(&cli.command)?;
    let mut cfg = load_config(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Run(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let mut pipeline = Pipeline::new(cfg)?;
        let section = command.run(&mut pipeline)?;
        artifacts::write(command.name(), pipeline.config(), &section)
    })
}
