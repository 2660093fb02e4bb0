//! Command implementations. Each takes a fully resolved configuration, writes
//! its artifacts into a run directory and returns that directory.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::io::LoadError;
use crate::manifest::{RunConfig, RunManifest};
use crate::parallel::Parallel;

mod benchmark;
mod predict;
mod simulate;

pub use benchmark::{run_benchmark_command, tier_defaults as benchmark_tier, BenchmarkRecord, BenchmarkRun, HUGE_ROWS};
pub use predict::{archive_intervals, run_predict, train_archive, Archive, Model, PredictRun};
pub use simulate::{run_simulate, SimulateRun, TableRow};

/// Failure of a command, mapped to the process exit code.
#[derive(Debug, Error)]
pub enum CommandError {
    /// Bad flags, flag combinations or missing input files: exit 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that goes wrong once the inputs are accepted: exit 1.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Usage(_) => 2,
            CommandError::Runtime(_) => 1,
        }
    }
}

impl From<LoadError> for CommandError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Open { .. } => CommandError::Usage(e.to_string()),
            other => CommandError::Runtime(other.into()),
        }
    }
}

impl From<iforge_core::Error> for CommandError {
    fn from(e: iforge_core::Error) -> Self {
        CommandError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Runtime(e.into())
    }
}

impl From<csv::Error> for CommandError {
    fn from(e: csv::Error) -> Self {
        CommandError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CommandError {
    fn from(e: serde_json::Error) -> Self {
        CommandError::Runtime(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> CommandError {
    CommandError::Usage(msg.into())
}

pub type CommandResult<T> = Result<T, CommandError>;

pub fn executor() -> CommandResult<Parallel> {
    Parallel::from_env().map_err(|e| CommandError::Runtime(e.into()))
}

/// Run any resolved configuration.
pub fn execute(run: RunConfig, out: &Path) -> CommandResult<PathBuf> {
    match run {
        RunConfig::Simulate(c) => run_simulate(c, out),
        RunConfig::Benchmark(c) => run_benchmark_command(c, out),
        RunConfig::Predict(c) => run_predict(c, out),
    }
}

/// Re-execute the configuration recorded in a manifest.
pub fn replay(manifest: &Path, out: &Path) -> CommandResult<PathBuf> {
    let manifest = RunManifest::read(manifest).map_err(|e| {
        if manifest.exists() {
            CommandError::Runtime(e)
        } else {
            usage(format!("{e:#}"))
        }
    })?;
    execute(manifest.run, out)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CommandResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
