//! Experiment runner for `torsion-lab`.
//!
//! `run` validates a configuration, executes one experiment and writes
//! `result.csv`, `result.json` and `manifest.json` into the output
//! directory. `verify` runs the acceptance suite.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use config::{ConfigError, ExperimentConfig};
use output::{Manifest, Table};
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

/// Environment variable capping internal parallelism.
pub const THREADS_ENV: &str = "TORSION_LAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for validation failures, 3 for numeric and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub table: Table,
    pub wall_time_seconds: f64,
}

/// Applies `TORSION_LAB_THREADS` to the worker pool. Invalid values are a
/// validation error.
pub fn apply_thread_cap() -> Result<(), ConfigError> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => {
            let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| ConfigError::Type {
                key: THREADS_ENV.into(),
                expected: "a positive integer",
                got: raw.clone(),
            })?;
            torsion_lab::par::init_threads(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Validates, runs and writes one experiment. Nothing is written unless the
/// computation succeeds.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let plan = experiments::plan(cfg)?;
    let start = Instant::now();
    let outcome = experiments::execute(&plan).map_err(CliError::Numeric)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let canonical = cfg.canonical();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: &canonical,
        parallel: torsion_lab::par::is_parallel(),
        wall_time_seconds,
        files: ["result.csv", "result.json"],
    };
    output::write_artifacts(&cfg.output_dir, &outcome.table, &outcome.json, &manifest)?;
    Ok(RunReport { output_dir: cfg.output_dir.clone(), table: outcome.table, wall_time_seconds })
}
