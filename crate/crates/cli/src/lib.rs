//! `ffsheets` command-line front end.
//!
//! A run reads one JSON experiment config, dispatches to the computation
//! library and writes CSV/JSON files into the output directory. A run report
//! (command, config digest, wall time, outputs, diagnostics, version) goes to
//! stdout; the written files never contain timing data, so identical configs
//! give byte-identical files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

pub use config::{parse, ExperimentConfig, Loaded};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("incomplete computation: {0}")]
    Incomplete(String),

    #[error("numeric failure: {0}")]
    Numeric(ffsheets_core::Error),

    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl From<ffsheets_core::Error> for CliError {
    fn from(e: ffsheets_core::Error) -> Self {
        match e {
            ffsheets_core::Error::IncompleteSearch { .. } => CliError::Incomplete(e.to_string()),
            e => CliError::Numeric(e),
        }
    }
}

impl CliError {
    /// 2 for config errors, 3 for incomplete computations, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Incomplete(_) => 3,
            CliError::Numeric(_) | CliError::Io { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Smatrix,
    Resonances,
    Sheetmap,
    Deform,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Smatrix => "smatrix",
            Command::Resonances => "resonances",
            Command::Sheetmap => "sheetmap",
            Command::Deform => "deform",
            Command::Validate => "validate",
        }
    }
}

/// What a command produced; `status` carries a non-fatal failure whose
/// partial outputs were still written.
#[derive(Debug)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub diagnostics: serde_json::Value,
    pub status: Option<CliError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub config_digest: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub diagnostics: serde_json::Value,
    pub version: &'static str,
}

/// A failed run with whatever report could be assembled.
#[derive(Debug)]
pub struct Failure {
    pub error: CliError,
    pub report: Option<RunReport>,
}

impl From<CliError> for Failure {
    fn from(error: CliError) -> Self {
        Failure { error, report: None }
    }
}

/// Runs `command` on an already parsed config.
pub fn run_loaded(command: Command, loaded: &Loaded, out: &Path, jobs: Option<usize>) -> Result<RunReport, Failure> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config {
            path: "--jobs".into(),
            message: e.to_string(),
        })?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    let outcome = pool.install(|| match command {
        Command::Smatrix => commands::smatrix(loaded, out),
        Command::Resonances => commands::resonances(loaded, out),
        Command::Sheetmap => commands::sheetmap(loaded, out),
        Command::Deform => commands::deform(loaded, out),
        Command::Validate => commands::validate(loaded, out),
    })?;
    let report = RunReport {
        command: command.name(),
        config_digest: loaded.digest.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        diagnostics: outcome.diagnostics,
        version: env!("CARGO_PKG_VERSION"),
    };
    match outcome.status {
        None => Ok(report),
        Some(error) => Err(Failure {
            error,
            report: Some(report),
        }),
    }
}

/// Loads the config at `config` and runs `command`.
pub fn run(command: Command, config: &Path, out: &Path, jobs: Option<usize>) -> Result<RunReport, Failure> {
    let loaded = config::load(config)?;
    run_loaded(command, &loaded, out, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ffsheets_core::numerics::Rect;

    #[test]
    fn exit_codes() {
        let incomplete = ffsheets_core::Error::IncompleteSearch {
            region: Rect::new(0.0, 1.0, -1.0, 0.0).unwrap(),
            expected: 2,
            found: 1,
        };
        assert_eq!(CliError::from(incomplete).exit_code(), 3);
        assert_eq!(CliError::from(ffsheets_core::Error::NoConvergence { iterations: 9 }).exit_code(), 4);
        let config = CliError::Config {
            path: "x".into(),
            message: "y".into(),
        };
        assert_eq!(config.exit_code(), 2);
    }
}
