//! Scenario simulation: truth propagation, bounded-noise measurement
//! synthesis, estimator execution and metric output.

mod config;
mod metrics;
mod noise;
mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ScenarioConfig, DEFAULT_STEPS};
pub use metrics::{emit_metrics, write_csv, write_json, MetricsRecord, OutputFormat, CSV_HEADER};
pub use noise::{sample_in_ball, sample_in_ellipsoid};
pub use scenario::{run_scenario, synthesize_measurements, MeasurementEvent, ScenarioRun};

/// Failures of a scenario run, grouped by how the CLI reports them.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] crate::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    /// Process exit code: 2 config, 3 numerical, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Numerical(_) => 3,
            SimError::Io { .. } => 4,
        }
    }
}
