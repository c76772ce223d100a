//! Batch front-end: JSON configurations in, JSON reports and CSV curves out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod describe;
mod error;
pub mod tasks;

use std::path::Path;

pub use config::{load, resolve, RunConfig};
pub use describe::describe;
pub use error::CliError;
pub use tasks::{run_tasks, write_reports, RunOptions, RunSummary, Status};

/// Loads, validates and runs a configuration, writing reports under `out`.
/// `threads = None` uses rayon's default pool size.
pub fn run(config: &Path, out: &Path, threads: Option<usize>, options: &RunOptions) -> Result<RunSummary, CliError> {
    let resolved = resolve(load(config)?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    let summary = pool.install(|| run_tasks(&resolved, options));
    write_reports(&summary, out)?;
    Ok(summary)
}

/// Summary text for a configuration without running its tasks.
pub fn describe_file(config: &Path) -> Result<String, CliError> {
    Ok(describe(&resolve(load(config)?)?))
}
