//! Verification harness: configuration files, the task catalog, parallel
//! execution and JSON reports.

pub mod catalog;
pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

pub use config::{Config, ConfigError};
pub use report::{Report, TaskRecord};
pub use runner::{run, run_with_threads};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failures that stop a run before or after task execution.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot build thread pool: {0}")]
    Pool(String),
}
