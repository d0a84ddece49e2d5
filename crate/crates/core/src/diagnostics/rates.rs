use super::escape::TrialOutcome;
use super::DiagnosticsError;
use crate::linalg::{self, linear_fit};
use crate::problems::ProblemInstance;
use crate::solvers::IterateTrace;
use serde::{Deserialize, Serialize};

/// Fewer survivors than this at the horizon make a fit inconclusive.
pub const MIN_SURVIVORS: usize = 10;
/// Minimum number of traces for [`distance_rate_fit`].
pub const MIN_TRACES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    /// Too few trials still inside the ball at the horizon.
    Inconclusive,
    /// Distances vanish identically; there is nothing to fit.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    #[serde(with = "crate::regularity::extended_real")]
    pub slope: f64,
    #[serde(with = "crate::regularity::extended_real")]
    pub intercept: f64,
    pub r_squared: f64,
    pub k_range: (usize, usize),
    pub status: FitStatus,
    pub survivors_at_end: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub k: usize,
    /// Mean of `dist^2(x_k, M)` over trials with `tau > k`.
    pub mean_dist2: Option<f64>,
    pub surviving_trials: usize,
}

/// Integers in `[kmin, kmax]` spaced evenly in `log k`, including both ends.
pub fn log_grid(kmin: usize, kmax: usize, per_decade: usize) -> Vec<usize> {
    let kmin = kmin.max(1);
    if kmax < kmin {
        return vec![];
    }
    let (a, b) = ((kmin as f64).log10(), (kmax as f64).log10());
    let n = ((b - a) * per_decade as f64).ceil() as usize;
    let mut out: Vec<usize> = (0..=n)
        .map(|i| {
            let t = if n == 0 { a } else { a + (b - a) * i as f64 / n as f64 };
            (10f64.powf(t).round() as usize).clamp(kmin, kmax)
        })
        .collect();
    out.push(kmin);
    out.push(kmax);
    out.sort_unstable();
    out.dedup();
    out
}

/// Per-grid-step survivor means, reduced in trial order.
pub fn summary_rows(outcomes: &[TrialOutcome], grid: &[usize]) -> Vec<SummaryRow> {
    grid.iter()
        .enumerate()
        .map(|(i, &k)| {
            let (mut sum, mut n) = (0.0, 0usize);
            for o in outcomes {
                if let Some(v) = o.dist2[i] {
                    sum += v;
                    n += 1;
                }
            }
            SummaryRow {
                k,
                mean_dist2: (n > 0).then(|| sum / n as f64),
                surviving_trials: n,
            }
        })
        .collect()
}

/// Log-log fit of the survivor mean of `dist^2` against `k` on `[k_min, K]`.
pub fn rate_fit_from_outcomes(outcomes: &[TrialOutcome], grid: &[usize], k_min: usize) -> RateFit {
    let rows = summary_rows(outcomes, grid);
    let in_range: Vec<&SummaryRow> = rows.iter().filter(|r| r.k >= k_min).collect();
    let k_max = grid.last().copied().unwrap_or(k_min);
    let survivors_at_end = rows.last().map_or(0, |r| r.surviving_trials);
    let (xs, ys): (Vec<f64>, Vec<f64>) = in_range
        .iter()
        .filter_map(|r| r.mean_dist2.filter(|&m| m > 0.0).map(|m| ((r.k as f64).ln(), m.ln())))
        .unzip();
    let any_positive = in_range.iter().any(|r| r.mean_dist2.is_some_and(|m| m > 0.0));
    let fit = linear_fit(&xs, &ys);
    let status = if !any_positive && survivors_at_end > 0 {
        FitStatus::Degenerate
    } else if survivors_at_end < MIN_SURVIVORS || fit.is_none() {
        FitStatus::Inconclusive
    } else {
        FitStatus::Ok
    };
    let (slope, intercept, r_squared) = fit.unwrap_or((f64::NAN, f64::NAN, 0.0));
    RateFit {
        slope,
        intercept,
        r_squared,
        k_range: (k_min, k_max),
        status,
        survivors_at_end,
        points: xs.len(),
    }
}

/// Per-trace outcomes on `grid`, with each trace stopped at its first exit
/// from `B_delta(anchor)`.
pub fn outcomes_from_traces(
    traces: &[IterateTrace],
    p: &ProblemInstance,
    delta: f64,
    grid: &[usize],
) -> Result<Vec<TrialOutcome>, DiagnosticsError> {
    let m = p.manifold()?;
    let anchor = m.anchor();
    Ok(traces
        .iter()
        .map(|t| {
            let tau = t
                .records
                .iter()
                .find(|r| linalg::dist(&r.x, anchor) > delta)
                .map(|r| r.k);
            let dist2 = grid
                .iter()
                .map(|&k| {
                    let r = t.records.get(k.checked_sub(1)?)?;
                    if tau.is_some_and(|tau| k >= tau) {
                        return None;
                    }
                    let d = r.dist.unwrap_or_else(|| m.distance(&r.x));
                    Some(d * d)
                })
                .collect();
            let last = t.records.last();
            TrialOutcome {
                trial: t.spec.trial,
                tau,
                dist2,
                last_k: last.map_or(0, |r| r.k),
                last_x: last.map_or_else(Vec::new, |r| r.x.clone()),
            }
        })
        .collect())
}

/// Rate fit from stored traces on a grid with about 20 points per decade.
pub fn distance_rate_fit(
    traces: &[IterateTrace],
    p: &ProblemInstance,
    k_min: usize,
    delta: f64,
) -> Result<RateFit, DiagnosticsError> {
    if traces.len() < MIN_TRACES {
        return Err(DiagnosticsError::TooFewTraces {
            need: MIN_TRACES,
            got: traces.len(),
        });
    }
    let horizon = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let grid = log_grid(1, horizon, 20);
    let outcomes = outcomes_from_traces(traces, p, delta, &grid)?;
    Ok(rate_fit_from_outcomes(&outcomes, &grid, k_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::problem_by_label;
    use crate::solvers::{run, MappingKind, NoiseModel, RunSpec, StepSchedule};

    #[test]
    fn grid_covers_ends_and_is_sorted() {
        let g = log_grid(1000, 100_000, 20);
        assert_eq!(g[0], 1000);
        assert_eq!(*g.last().unwrap(), 100_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!((40..=42).contains(&g.len()), "{}", g.len());
        assert_eq!(log_grid(1, 5, 20), vec![1, 2, 3, 4, 5]);
    }

    fn outcome(dist2: Vec<Option<f64>>) -> TrialOutcome {
        TrialOutcome { trial: 0, tau: None, dist2, last_k: 0, last_x: vec![] }
    }

    #[test]
    fn synthetic_power_law_is_recovered() {
        let grid = log_grid(1, 10_000, 20);
        let outcomes: Vec<TrialOutcome> = (0..20)
            .map(|i| outcome(grid.iter().map(|&k| Some((1.0 + i as f64) * (k as f64).powf(-0.7))).collect()))
            .collect();
        let fit = rate_fit_from_outcomes(&outcomes, &grid, 100);
        assert_eq!(fit.status, FitStatus::Ok);
        assert!((fit.slope + 0.7).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.k_range, (100, 10_000));
    }

    #[test]
    fn too_few_survivors_is_inconclusive() {
        let grid = vec![1, 10, 100];
        let outcomes: Vec<TrialOutcome> = (0..20)
            .map(|i| outcome(vec![Some(1.0), Some(0.5), if i < 5 { Some(0.1) } else { None }]))
            .collect();
        let fit = rate_fit_from_outcomes(&outcomes, &grid, 1);
        assert_eq!(fit.status, FitStatus::Inconclusive);
        let rows = summary_rows(&outcomes, &grid);
        assert_eq!(rows[2].surviving_trials, 5);
    }

    #[test]
    fn on_manifold_noiseless_run_is_degenerate() {
        let z2 = problem_by_label("Z2").unwrap();
        let spec = RunSpec {
            mapping: MappingKind::Subgradient,
            schedule: StepSchedule::new(0.1, 0.7),
            noise: NoiseModel::Zero,
            steps: 2000,
            seed: 0,
            trial: 0,
        };
        let trace = run(&z2, spec, vec![0.0, 0.3]).unwrap();
        assert!(trace.records.iter().all(|r| r.dist == Some(0.0)));
        let traces = vec![trace; 50];
        let fit = distance_rate_fit(&traces, &z2, 100, 0.5).unwrap();
        assert_eq!(fit.status, FitStatus::Degenerate);
        assert!(matches!(
            distance_rate_fit(&traces[..10], &z2, 100, 0.5),
            Err(DiagnosticsError::TooFewTraces { .. })
        ));
    }
}
