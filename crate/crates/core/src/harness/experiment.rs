use super::{ExperimentConfig, HarnessError, X0Spec};
use crate::diagnostics::{
    log_grid, rate_fit_from_outcomes, simulate_trial_observed, summary_rows, ConvergenceStats,
    DiagnosticsError, EscapeStats, RateFit, SummaryRow, TrialExecutor, TrialOutcome, TrialSetup,
};
use crate::linalg;
use crate::problems::{Classification, ProblemInstance, ProblemMetadata};
use crate::regularity::{estimate_aiming, SampleLadder};
use crate::solvers::{encode_stopping_time, read_trace_jsonl, TraceMeta, TraceWriter};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
const TRACE_DIR: &str = "traces";
/// Convergence tolerance used for local minimizers when the config sets none.
const DEFAULT_CONVERGE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub trial: u64,
    /// Generator key and stream id of the trial.
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub trial_seeds: Vec<TrialSeed>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub workers: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExits {
    pub delta: f64,
    /// Stopping time per trial, `steps + 1` for "never".
    pub stopping_times: Vec<usize>,
    pub escape: EscapeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub problem: ProblemMetadata,
    pub config_hash: String,
    pub exits: Vec<BallExits>,
    pub convergence: Option<ConvergenceStats>,
    pub rate_fit: RateFit,
    pub final_distances: Vec<f64>,
}

/// Steps `1..=100` followed by a 20-per-decade log grid up to `steps`.
pub fn summary_grid(steps: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (1..=steps.min(100)).collect();
    g.extend(log_grid(1, steps, 20));
    g.sort_unstable();
    g.dedup();
    g
}

/// `k,mean_dist2,surviving_trials` with an empty mean where no trial survives.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("k,mean_dist2,surviving_trials\n");
    for r in rows {
        let mean = r.mean_dist2.map(|m| format!("{m:e}")).unwrap_or_default();
        writeln!(s, "{},{},{}", r.k, mean, r.surviving_trials).unwrap();
    }
    s
}

fn trace_name(trial: u64) -> String {
    format!("{TRACE_DIR}/trial_{trial:05}.jsonl")
}

/// Warns when `gamma = 1` and `c1 < 32 / mu_hat`.
fn unit_gamma_warning(config: &ExperimentConfig, p: &ProblemInstance) -> Option<String> {
    if config.schedule.gamma < 1.0 {
        return None;
    }
    let radius = p.manifold().ok()?.validity_radius().min(0.25);
    let ladder = SampleLadder::dyadic(radius, 6, 256, config.seed);
    match estimate_aiming(p, &ladder) {
        Ok((mu, _)) if mu > 0.0 => (config.schedule.c1 < 32.0 / mu).then(|| {
            format!(
                "gamma = 1 with c1 = {} below 32 / mu_hat = {:.4} (mu_hat = {mu:.4})",
                config.schedule.c1,
                32.0 / mu
            )
        }),
        _ => Some("gamma = 1 and the aiming constant could not be estimated".into()),
    }
}

struct TrialRun {
    outcome: TrialOutcome,
    /// First exit per entry of the delta ladder.
    exits: Vec<Option<usize>>,
    artifacts: Vec<String>,
}

fn run_trial(
    config: &ExperimentConfig,
    setup: &TrialSetup,
    anchor: &[f64],
    trial: u64,
) -> Result<TrialRun, HarnessError> {
    let mut exits = vec![None; config.delta.len()];
    let mut artifacts = Vec::new();
    let mut writer = if config.write_traces {
        let name = trace_name(trial);
        let meta = TraceMeta {
            problem: config.problem.clone(),
            spec: setup.spec(trial),
            x0: setup.x0(trial)?,
        };
        let w = TraceWriter::create(&config.output_dir.join(&name), meta)?;
        artifacts.push(format!("{name}.meta.json"));
        artifacts.insert(0, name);
        Some(w)
    } else {
        None
    };
    let outcome = simulate_trial_observed(setup, trial, |rec| {
        let d = linalg::dist(&rec.x, anchor);
        for (slot, &delta) in exits.iter_mut().zip(&config.delta) {
            if slot.is_none() && d > delta {
                *slot = Some(rec.k);
            }
        }
        match writer.as_mut() {
            Some(w) => w.push(rec).map_err(DiagnosticsError::from),
            None => Ok(()),
        }
    })?;
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(TrialRun { outcome, exits, artifacts })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Runs all trials of `config`, writes traces, `report.json`, `summary.csv`,
/// `config.json` and `manifest.json` under `config.output_dir`.
pub fn run_experiment<E: TrialExecutor>(
    config: &ExperimentConfig,
    exec: &E,
    workers: Option<usize>,
) -> Result<RunManifest, HarnessError> {
    let clock = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let p = config.validate()?;
    let anchor = p.manifold()?.anchor().to_vec();
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    if config.write_traces {
        fs::create_dir_all(out.join(TRACE_DIR))?;
    }
    let mut warnings: Vec<String> = unit_gamma_warning(config, &p).into_iter().collect();
    let grid = summary_grid(config.steps);
    let (x0_center, x0_radius) = match &config.x0 {
        X0Spec::Literal { point } => (Some(point.clone()), 0.0),
        X0Spec::UniformBall { radius } => (None, *radius),
    };
    let setup = TrialSetup {
        problem: &p,
        mapping: config.mapping,
        schedule: config.schedule,
        noise: config.noise,
        steps: config.steps,
        seed: config.seed,
        x0_radius,
        x0_center,
        delta: config.delta[0],
        grid: grid.clone(),
        stop_on_exit: config.stop_on_exit,
    };
    let runs = exec
        .map_trials(config.trials, |t| run_trial(config, &setup, &anchor, t))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let outcomes: Vec<TrialOutcome> = runs.iter().map(|r| r.outcome.clone()).collect();
    let rows = summary_rows(&outcomes, &grid);
    let rate_fit = rate_fit_from_outcomes(&outcomes, &grid, config.k_min.min(config.steps));
    let exits: Vec<BallExits> = config
        .delta
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let per_trial: Vec<TrialOutcome> = runs
                .iter()
                .map(|r| TrialOutcome { tau: r.exits[i], ..r.outcome.clone() })
                .collect();
            BallExits {
                delta,
                stopping_times: runs.iter().map(|r| encode_stopping_time(r.exits[i], config.steps)).collect(),
                escape: EscapeStats::from_outcomes(&per_trial, delta, config.steps),
            }
        })
        .collect();
    let convergence = (p.classification == Classification::LocalMin && !config.stop_on_exit).then(|| {
        let tol = config.converge_tol.unwrap_or(DEFAULT_CONVERGE_TOL);
        ConvergenceStats::from_outcomes(&outcomes, &anchor, config.delta[0], tol, config.steps)
    });
    if p.classification == Classification::ActiveStrictSaddle && !exits[0].escape.median_reached {
        warnings.push(format!(
            "median escape from B_{} not reached within {} steps",
            config.delta[0], config.steps
        ));
    }
    let config_hash = config.content_hash();
    let report = ExperimentReport {
        problem: p.metadata(),
        config_hash: config_hash.clone(),
        exits,
        convergence,
        rate_fit,
        final_distances: outcomes.iter().map(|o| linalg::dist(&o.last_x, &anchor)).collect(),
    };
    for w in &warnings {
        log::warn!("{w}");
    }

    write_json(&out.join(CONFIG_FILE), config)?;
    write_json(&out.join(REPORT_FILE), &report)?;
    fs::write(out.join(SUMMARY_FILE), summary_csv(&rows))?;
    let mut artifacts: Vec<String> = runs.into_iter().flat_map(|r| r.artifacts).collect();
    artifacts.extend([CONFIG_FILE, REPORT_FILE, SUMMARY_FILE].map(String::from));
    let manifest = RunManifest {
        config_hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        trial_seeds: (0..config.trials)
            .map(|t| TrialSeed { trial: t, seed: config.seed, stream: t })
            .collect(),
        artifacts,
        started_unix,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        workers,
        warnings,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest, HarnessError> {
    Ok(serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?)
}

pub fn load_report(dir: &Path) -> Result<ExperimentReport, HarnessError> {
    Ok(serde_json::from_slice(&fs::read(dir.join(REPORT_FILE))?)?)
}

/// Checks that every artifact listed in the manifest exists and parses.
pub fn verify_artifacts(dir: &Path, manifest: &RunManifest) -> Result<(), HarnessError> {
    for name in &manifest.artifacts {
        let path: PathBuf = dir.join(name);
        if name.ends_with(".jsonl") {
            read_trace_jsonl(&path)?;
        } else if name.ends_with(".json") {
            serde_json::from_slice::<serde_json::Value>(&fs::read(&path)?)?;
        } else if name.ends_with(".csv") {
            let text = fs::read_to_string(&path)?;
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default();
            let width = header.split(',').count();
            for line in lines {
                let cols: Vec<&str> = line.split(',').collect();
                let numeric = cols.iter().all(|c| c.is_empty() || c.parse::<f64>().is_ok());
                if cols.len() != width || !numeric {
                    return Err(HarnessError::Artifact(format!("{name}: malformed row `{line}`")));
                }
            }
        } else if !path.is_file() {
            return Err(HarnessError::Artifact(format!("{name} is missing")));
        }
    }
    Ok(())
}

/// Re-runs the config stored in `dir` into `into` and returns the new report.
pub fn replay<E: TrialExecutor>(dir: &Path, into: &Path, exec: &E) -> Result<ExperimentReport, HarnessError> {
    let mut config: ExperimentConfig = serde_json::from_slice(&fs::read(dir.join(CONFIG_FILE))?)?;
    config.output_dir = into.to_path_buf();
    run_experiment(&config, exec, None)?;
    load_report(into)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Serial;

    #[test]
    fn grid_starts_dense() {
        let g = summary_grid(1000);
        assert_eq!(&g[..100], &(1..=100).collect::<Vec<_>>()[..]);
        assert_eq!(*g.last().unwrap(), 1000);
        assert_eq!(summary_grid(20), (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn csv_leaves_missing_means_empty() {
        let rows = [
            SummaryRow { k: 1, mean_dist2: Some(0.25), surviving_trials: 3 },
            SummaryRow { k: 2, mean_dist2: None, surviving_trials: 0 },
        ];
        assert_eq!(summary_csv(&rows), "k,mean_dist2,surviving_trials\n1,2.5e-1,3\n2,,0\n");
    }

    #[test]
    fn unit_gamma_with_small_c1_warns() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::template("Z1");
        c.schedule.gamma = 1.0;
        c.allow_unit_gamma = true;
        c.steps = 50;
        c.output_dir = dir.path().to_path_buf();
        let m = run_experiment(&c, &Serial, None).unwrap();
        assert!(m.warnings.iter().any(|w| w.contains("32 / mu_hat")), "{:?}", m.warnings);
    }
}
