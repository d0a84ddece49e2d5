//! Browser bindings: an iterate path, an escape-time histogram and a
//! regularity profile, each returned as a JSON string.

use saddlescape::diagnostics::{run_trials, EscapeStats, Serial, TrialSetup};
use saddlescape::problems::{problem_by_label, Classification};
use saddlescape::regularity::{check, Condition, SampleLadder};
use saddlescape::solvers::{encode_stopping_time, Iteration, MappingKind, NoiseModel, StepSchedule};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Most points sent back for drawing.
const MAX_POINTS: usize = 2000;
const MAX_STEPS: usize = 1_000_000;
const MAX_TRIALS: u64 = 5000;

fn mapping_for(label: &str) -> MappingKind {
    match label {
        "Z3" => MappingKind::ProjectedSubgradient,
        "Z7" => MappingKind::ProximalGradient,
        _ => MappingKind::Subgradient,
    }
}

fn noise(r: f64) -> NoiseModel {
    if r == 0.0 {
        NoiseModel::Zero
    } else {
        NoiseModel::UniformBall { r }
    }
}

#[derive(Serialize)]
struct Trajectory {
    problem: String,
    anchor: Vec<f64>,
    /// Iterate steps kept for drawing.
    k: Vec<usize>,
    x: Vec<Vec<f64>>,
    dist: Vec<f64>,
    f: Vec<f64>,
    /// Exit step from `B_delta(anchor)`, `steps + 1` if none.
    stopping_time: usize,
}

#[derive(Serialize)]
struct Histogram {
    stats: EscapeStats,
    /// Left edges of log-spaced bins in `k`.
    edges: Vec<f64>,
    counts: Vec<usize>,
}

#[allow(clippy::too_many_arguments)]
fn setup<'a>(
    p: &'a saddlescape::ProblemInstance,
    gamma: f64,
    c1: f64,
    noise_r: f64,
    steps: usize,
    seed: u64,
    x0_radius: f64,
    delta: f64,
) -> Result<TrialSetup<'a>, String> {
    if steps == 0 || steps > MAX_STEPS {
        return Err(format!("steps must lie in 1..={MAX_STEPS}"));
    }
    Ok(TrialSetup {
        problem: p,
        mapping: mapping_for(&p.label),
        schedule: StepSchedule::new(c1, gamma),
        noise: noise(noise_r),
        steps,
        seed,
        x0_radius,
        x0_center: None,
        delta,
        grid: vec![],
        stop_on_exit: false,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn trajectory_json(
    problem: &str,
    gamma: f64,
    c1: f64,
    noise_r: f64,
    steps: usize,
    seed: u64,
    x0_radius: f64,
    delta: f64,
) -> Result<String, String> {
    let p = problem_by_label(problem).map_err(|e| e.to_string())?;
    let s = setup(&p, gamma, c1, noise_r, steps, seed, x0_radius, delta)?;
    let anchor = p.manifold().map_err(|e| e.to_string())?.anchor().to_vec();
    let stride = steps.div_ceil(MAX_POINTS).max(1);
    let mut out = Trajectory {
        problem: p.label.clone(),
        anchor: anchor.clone(),
        k: vec![],
        x: vec![],
        dist: vec![],
        f: vec![],
        stopping_time: steps + 1,
    };
    let x0 = s.x0(0).map_err(|e| e.to_string())?;
    let mut tau = None;
    for rec in Iteration::new(&p, s.spec(0), x0).map_err(|e| e.to_string())? {
        let rec = rec.map_err(|e| e.to_string())?;
        if tau.is_none() && saddlescape::linalg::dist(&rec.x, &anchor) > delta {
            tau = Some(rec.k);
        }
        if rec.k % stride == 1 || stride == 1 || rec.k == steps {
            out.k.push(rec.k);
            out.dist.push(rec.dist.unwrap_or(f64::NAN));
            out.f.push(rec.f);
            out.x.push(rec.x);
        }
    }
    out.stopping_time = encode_stopping_time(tau, steps);
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[allow(clippy::too_many_arguments)]
pub fn histogram_json(
    problem: &str,
    trials: u64,
    steps: usize,
    gamma: f64,
    c1: f64,
    noise_r: f64,
    delta: f64,
    seed: u64,
) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must lie in 1..={MAX_TRIALS}"));
    }
    let p = problem_by_label(problem).map_err(|e| e.to_string())?;
    if p.classification != Classification::ActiveStrictSaddle {
        return Err(format!("{problem} is not an active strict saddle"));
    }
    let s = TrialSetup {
        stop_on_exit: true,
        ..setup(&p, gamma, c1, noise_r, steps, seed, delta / 10.0, delta)?
    };
    let outcomes = run_trials(&s, trials, &Serial).map_err(|e| e.to_string())?;
    let stats = EscapeStats::from_outcomes(&outcomes, delta, steps);
    let bins = 24;
    let top = (steps as f64).log10().max(1.0);
    let edges: Vec<f64> = (0..bins).map(|i| 10f64.powf(top * i as f64 / bins as f64)).collect();
    let mut counts = vec![0; bins];
    for tau in outcomes.iter().filter_map(|o| o.tau) {
        let b = edges.iter().rposition(|&e| tau as f64 >= e).unwrap_or(0);
        counts[b] += 1;
    }
    serde_json::to_string(&Histogram { stats, edges, counts }).map_err(|e| e.to_string())
}

pub fn profile_json(problem: &str, condition: &str, samples: usize, seed: u64) -> Result<String, String> {
    let p = problem_by_label(problem).map_err(|e| e.to_string())?;
    let condition: Condition =
        serde_json::from_value(serde_json::Value::String(condition.into())).map_err(|_| format!("unknown condition `{condition}`"))?;
    let ladder = SampleLadder::dyadic(0.25, 8, samples, seed);
    let report = check(&p, condition, &ladder).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Path of one noisy run; starts uniformly in `B_{x0_radius}(anchor)`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_trajectory(
    problem: &str,
    gamma: f64,
    c1: f64,
    noise_r: f64,
    steps: usize,
    seed: u64,
    x0_radius: f64,
    delta: f64,
) -> Result<String, JsValue> {
    trajectory_json(problem, gamma, c1, noise_r, steps, seed, x0_radius, delta).map_err(|e| JsValue::from_str(&e))
}

/// Escape statistics and a log-binned histogram of exit steps.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn escape_histogram(
    problem: &str,
    trials: u64,
    steps: usize,
    gamma: f64,
    c1: f64,
    noise_r: f64,
    delta: f64,
    seed: u64,
) -> Result<String, JsValue> {
    histogram_json(problem, trials, steps, gamma, c1, noise_r, delta, seed).map_err(|e| JsValue::from_str(&e))
}

/// Per-shell residuals for one regularity condition.
#[wasm_bindgen]
pub fn regularity_profile(problem: &str, condition: &str, samples: usize, seed: u64) -> Result<String, JsValue> {
    profile_json(problem, condition, samples, seed).map_err(|e| JsValue::from_str(&e))
}
