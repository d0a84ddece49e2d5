//! Post-processing of iterate traces and Monte Carlo summaries.

mod escape;
mod lemmas;
mod lyapunov;
mod rates;
mod shadow;

pub use escape::{
    convergence_statistics, escape_statistics, run_trials, simulate_trial, simulate_trial_observed,
    ConvergenceStats, EscapeStats, TrialOutcome, TrialSetup,
};
pub use lemmas::{sequence_lemma_oracle, Lemma, LemmaParams, LemmaReport};
pub use lyapunov::{lyapunov_eta, LyapunovCertificate, LyapunovEta};
pub use rates::{
    distance_rate_fit, log_grid, outcomes_from_traces, rate_fit_from_outcomes, summary_rows,
    FitStatus, RateFit, SummaryRow, MIN_SURVIVORS, MIN_TRACES,
};
pub use shadow::{error_bound_ratios, shadow_sequence, ShadowRecord};

use crate::problems::ProblemError;
use crate::solvers::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trace has no records")]
    EmptyTrace,
    #[error("trace record {k} has noise of dimension {got}, expected {expected}")]
    MissingNoise { k: usize, got: usize, expected: usize },
    #[error("shadow radius 4 * {delta} exceeds the validity radius {radius}")]
    ShadowRadius { delta: f64, radius: f64 },
    #[error("problem `{0}` is not an active strict saddle")]
    NotASaddle(String),
    #[error("need at least {need} traces, got {got}")]
    TooFewTraces { need: usize, got: usize },
    #[error("matrix has no negative eigenvalue, so there is no unstable subspace")]
    NoUnstableSubspace,
    #[error("lemma hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Matrix(#[from] crate::linalg::MatrixError),
}

/// Runs independent trials and returns their results in trial order.
pub trait TrialExecutor: Sync {
    fn map_trials<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl TrialExecutor for Serial {
    fn map_trials<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..trials).map(f).collect()
    }
}
