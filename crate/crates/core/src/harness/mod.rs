//! Batch experiments: suites, runs, sweeps and reports.

mod config;
mod report;
mod run;
mod suite;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{lion_suite, synthetic_suite, ExperimentConfig, LandscapeEntry, OracleSettings};
pub use report::{count_traces, emit_report, format_table, read_rows, read_summary, read_sweep, write_rows, write_sweep};
pub use run::{
    config_hash, run_experiment, run_seed, summarize, Exclusion, LandscapeFailure, MetricSummary, ResultsTable, Row,
    StrategyAggregate, Summary, TraceRecord, METRICS,
};
pub use suite::{
    build_landscape, instantiate, key_hash, lion_cache_key, load_or_train, oracle_stream, proximity_endpoints, references, sweep, BuiltLandscape,
    SweepCurve,
};

use crate::landscape::LandscapeError;
use crate::lion::LionError;
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("malformed results: {0}")]
    Format(String),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error(transparent)]
    Lion(#[from] LionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Configuration problems are the caller's to fix; everything else is a
    /// runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}
