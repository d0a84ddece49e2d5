//! Experiment configuration, parallel orchestration, file output and the
//! acceptance suite.

pub mod acceptance;
mod config;
mod executor;
mod experiment;

pub use acceptance::{acceptance_suite, run_criterion, AcceptanceReport, CriterionResult, Tier, CRITERIA};
pub use config::{ExperimentConfig, X0Spec};
pub use executor::{resolve_workers, RayonExecutor, WORKERS_ENV};
pub use experiment::{
    load_manifest, load_report, replay, run_experiment, summary_csv, summary_grid, verify_artifacts,
    BallExits, ExperimentReport, RunManifest, TrialSeed, CONFIG_FILE, MANIFEST_FILE, REPORT_FILE,
    SUMMARY_FILE,
};

use crate::diagnostics::DiagnosticsError;
use crate::linalg::MatrixError;
use crate::problems::ProblemError;
use crate::regularity::RegularityError;
use crate::solvers::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}
