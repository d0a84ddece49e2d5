use super::{DiagnosticsError, TrialExecutor};
use crate::linalg;
use crate::problems::{uniform_in_ball, Classification, Point, ProblemInstance};
use crate::solvers::{Iteration, MappingKind, NoiseModel, RunSpec, StepRecord, StepSchedule};
use serde::{Deserialize, Serialize};

/// Shared parameters of a batch of independent trials started uniformly in
/// `B_{x0_radius}(x0_center)`.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub problem: &'a ProblemInstance,
    pub mapping: MappingKind,
    pub schedule: StepSchedule,
    pub noise: NoiseModel,
    pub steps: usize,
    pub seed: u64,
    pub x0_radius: f64,
    /// Center of the starting ball; the anchor when `None`.
    pub x0_center: Option<Point>,
    /// Radius of the ball whose exit defines the stopping time.
    pub delta: f64,
    /// Steps at which `dist^2(x_k, M)` is recorded while `k < tau`.
    pub grid: Vec<usize>,
    /// Stop a trial as soon as it leaves the ball.
    pub stop_on_exit: bool,
}

impl TrialSetup<'_> {
    pub fn spec(&self, trial: u64) -> RunSpec {
        RunSpec {
            mapping: self.mapping,
            schedule: self.schedule,
            noise: self.noise,
            steps: self.steps,
            seed: self.seed,
            trial,
        }
    }

    fn anchor(&self) -> Result<Point, DiagnosticsError> {
        Ok(self.problem.manifold()?.anchor().to_vec())
    }

    /// Starting point of `trial`, drawn at counter 0 of its stream and moved
    /// into the constraint set when the problem has one.
    pub fn x0(&self, trial: u64) -> Result<Point, DiagnosticsError> {
        let center = match &self.x0_center {
            Some(c) => c.clone(),
            None => self.anchor()?,
        };
        if self.x0_radius == 0.0 {
            return Ok(center);
        }
        let mut rng = self.spec(trial).stream().at(0);
        let x = uniform_in_ball(&mut rng, &center, self.x0_radius);
        Ok(self.problem.objective.project_constraint(&x).unwrap_or(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// First step `k >= 1` with `|x_k - anchor| > delta`.
    pub tau: Option<usize>,
    /// `dist^2(x_k, M)` at each grid step, `None` from `tau` on.
    pub dist2: Vec<Option<f64>>,
    /// Last simulated iterate and its step index.
    pub last_k: usize,
    pub last_x: Point,
}

pub fn simulate_trial(setup: &TrialSetup, trial: u64) -> Result<TrialOutcome, DiagnosticsError> {
    simulate_trial_observed(setup, trial, |_| Ok(()))
}

/// [`simulate_trial`] with a callback on every simulated step.
pub fn simulate_trial_observed<F>(setup: &TrialSetup, trial: u64, mut observe: F) -> Result<TrialOutcome, DiagnosticsError>
where
    F: FnMut(&StepRecord) -> Result<(), DiagnosticsError>,
{
    let anchor = setup.anchor()?;
    let x0 = setup.x0(trial)?;
    let mut dist2 = vec![None; setup.grid.len()];
    let mut slot = 0;
    let mut tau = None;
    let mut last = (0, x0.clone());
    for rec in Iteration::new(setup.problem, setup.spec(trial), x0)? {
        let rec = rec?;
        observe(&rec)?;
        if tau.is_none() && linalg::dist(&rec.x, &anchor) > setup.delta {
            tau = Some(rec.k);
        }
        while slot < setup.grid.len() && setup.grid[slot] < rec.k {
            slot += 1;
        }
        if slot < setup.grid.len() && setup.grid[slot] == rec.k && tau.is_none() {
            dist2[slot] = rec.dist.map(|d| d * d);
        }
        let stop = tau.is_some() && setup.stop_on_exit;
        last = (rec.k, rec.x);
        if stop {
            break;
        }
    }
    Ok(TrialOutcome {
        trial,
        tau,
        dist2,
        last_k: last.0,
        last_x: last.1,
    })
}

/// Simulates trials `0..trials` and returns their outcomes in trial order.
pub fn run_trials<E: TrialExecutor>(
    setup: &TrialSetup,
    trials: u64,
    exec: &E,
) -> Result<Vec<TrialOutcome>, DiagnosticsError> {
    exec.map_trials(trials, |t| simulate_trial(setup, t))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeStats {
    pub trials: usize,
    pub escaped: usize,
    pub escaped_fraction: f64,
    /// Median stopping time over all trials, counting non-escapes as never.
    pub median_escape_index: Option<usize>,
    pub delta: f64,
    pub horizon: usize,
    /// False when fewer than half the trials escaped within the horizon.
    pub median_reached: bool,
}

impl EscapeStats {
    pub fn from_outcomes(outcomes: &[TrialOutcome], delta: f64, horizon: usize) -> Self {
        let trials = outcomes.len();
        let mut taus: Vec<usize> = outcomes.iter().filter_map(|o| o.tau).collect();
        taus.sort_unstable();
        let escaped = taus.len();
        let mid = trials.saturating_sub(1) / 2;
        let median = (trials > 0 && mid < escaped).then(|| taus[mid]);
        Self {
            trials,
            escaped,
            escaped_fraction: if trials == 0 { 0.0 } else { escaped as f64 / trials as f64 },
            median_escape_index: median,
            delta,
            horizon,
            median_reached: median.is_some(),
        }
    }
}

/// Escape counts from `B_delta(anchor)` for a strict-saddle instance.
pub fn escape_statistics<E: TrialExecutor>(
    setup: &TrialSetup,
    trials: u64,
    exec: &E,
) -> Result<EscapeStats, DiagnosticsError> {
    if setup.problem.classification != Classification::ActiveStrictSaddle {
        return Err(DiagnosticsError::NotASaddle(setup.problem.label.clone()));
    }
    let setup = TrialSetup {
        stop_on_exit: true,
        ..setup.clone()
    };
    let outcomes = run_trials(&setup, trials, exec)?;
    Ok(EscapeStats::from_outcomes(&outcomes, setup.delta, setup.steps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub trials: usize,
    /// Trials that never left the ball and end within `tol` of the anchor.
    pub converged: usize,
    pub converged_fraction: f64,
    pub delta: f64,
    pub tol: f64,
    pub horizon: usize,
}

impl ConvergenceStats {
    /// `last_x` must be the final iterate, so trials should not stop on exit.
    pub fn from_outcomes(outcomes: &[TrialOutcome], anchor: &[f64], delta: f64, tol: f64, horizon: usize) -> Self {
        let converged = outcomes
            .iter()
            .filter(|o| o.tau.is_none() && linalg::dist(&o.last_x, anchor) <= tol)
            .count();
        Self {
            trials: outcomes.len(),
            converged,
            converged_fraction: converged as f64 / outcomes.len().max(1) as f64,
            delta,
            tol,
            horizon,
        }
    }
}

/// Counterpart of [`escape_statistics`] for local minimizers.
pub fn convergence_statistics<E: TrialExecutor>(
    setup: &TrialSetup,
    trials: u64,
    tol: f64,
    exec: &E,
) -> Result<ConvergenceStats, DiagnosticsError> {
    let anchor = setup.anchor()?;
    let outcomes = run_trials(setup, trials, exec)?;
    Ok(ConvergenceStats::from_outcomes(&outcomes, &anchor, setup.delta, tol, setup.steps))
}
