//! Experiment harness for the prescribed-performance attitude estimators:
//! configuration, trajectory recording, summary statistics and file output.
//!
//! One experiment propagates a ground-truth attitude, synthesizes noisy
//! sensor streams from a seeded generator, runs the selected estimator and
//! records one row per sample. Monte-Carlo ensembles run the same
//! configuration under derived seeds, optionally in parallel.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{
    DiscreteModeSpec, EstimatorKind, ExperimentConfig, Form, Integrator, NoiseModeSpec,
    ProfileSpec, RotationSpec,
};
pub use experiment::{
    run_experiment, run_monte_carlo, summarize, EnsembleStats, RunOutcome,
    RunSummary, SummaryStats, TrajectoryRecord, TrajectoryRow,
};
pub use output::{write_csv, write_ensemble_json, write_summary_json};

/// Harness-level errors, including everything surfaced from the filters with
/// the step index attached.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("estimator error at step {step} (t = {t}): {source}")]
    Estimator {
        step: usize,
        t: f64,
        source: so3_ppf::Error,
    },
    #[error("performance envelope breached at step {step} (t = {t}): dist {dist} >= xi {xi}")]
    EnvelopeBreach { step: usize, t: f64, dist: f64, xi: f64 },
    #[error("summary window [{0}, {1}] contains no samples")]
    EmptyWindow(f64, f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
