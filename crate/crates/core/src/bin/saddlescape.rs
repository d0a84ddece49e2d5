use clap::{Args, Parser, Subcommand};
use saddlescape::diagnostics::{
    error_bound_ratios, log_grid, outcomes_from_traces, rate_fit_from_outcomes, run_trials,
    shadow_sequence, summary_rows, ConvergenceStats, EscapeStats, FitStatus, TrialSetup, MIN_TRACES,
};
use saddlescape::harness::{
    acceptance_suite, run_experiment, summary_csv, summary_grid, ExperimentConfig, HarnessError,
    RayonExecutor, Tier, X0Spec,
};
use saddlescape::problems::{problem_by_label, Classification};
use saddlescape::regularity::{check, Condition, SampleLadder, Verdict};
use saddlescape::solvers::{
    encode_stopping_time, read_trace_jsonl, Iteration, MappingKind, NoiseModel, StepSchedule,
    TraceMeta, TraceWriter,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "saddlescape", version, about = "Perturbed subgradient methods near active manifolds")]
struct Cli {
    /// Worker threads; falls back to SADDLESCAPE_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trace (`--out`) or a full experiment (`--out-dir`).
    Run(RunArgs),
    /// Sample a regularity condition on a zoo instance.
    CheckRegularity(RegularityArgs),
    /// Shadow sequence and error term of a stored trace.
    Shadow(ShadowArgs),
    /// Distance-decay fit over a set of stored traces.
    FitRates(FitRatesArgs),
    /// Monte Carlo escape (saddles) or convergence (minimizers) statistics.
    Escape(EscapeArgs),
    /// Run the acceptance criteria.
    Accept(AcceptArgs),
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{t}`: {e}")))
        .collect()
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown condition `{s}`"))
}

fn parse_verdict(s: &str) -> Result<Verdict, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown verdict `{s}`"))
}

/// Flags for `run`. `--config` takes an experiment config (as written to
/// `<out-dir>/config.json`); each flag given overrides the matching field.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    mapping: Option<MappingKind>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Noise radius; 0 disables noise.
    #[arg(long)]
    noise_r: Option<f64>,
    /// Literal starting point, e.g. "0,0.01".
    #[arg(long, conflicts_with = "x0_radius")]
    x0: Option<String>,
    /// Start uniformly in this ball around the anchor.
    #[arg(long)]
    x0_radius: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Trial index for single-trace runs.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    stop_on_exit: bool,
    #[arg(long)]
    allow_unit_gamma: bool,
    #[arg(long)]
    no_traces: bool,
    /// Write a single JSONL trace here.
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl RunArgs {
    fn experiment(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut c = match (&self.config, &self.problem) {
            (Some(path), _) => serde_json::from_slice(&std::fs::read(path)?)?,
            (None, Some(p)) => ExperimentConfig::template(p),
            (None, None) => return Err(HarnessError::Config("need --problem or --config".into())),
        };
        if let Some(p) = &self.problem {
            c.problem = p.clone();
        }
        if let Some(m) = self.mapping {
            c.mapping = m;
        }
        if let Some(g) = self.gamma {
            c.schedule.gamma = g;
        }
        if let Some(c1) = self.c1 {
            let widen = c.schedule.c2 < c1;
            c.schedule.c1 = c1;
            if widen {
                c.schedule.c2 = c1;
            }
        }
        if let Some(c2) = self.c2 {
            c.schedule.c2 = c2;
        }
        if let Some(r) = self.noise_r {
            c.noise = if r == 0.0 { NoiseModel::Zero } else { NoiseModel::UniformBall { r } };
        }
        if let Some(x0) = &self.x0 {
            let point = parse_point(x0).map_err(HarnessError::Config)?;
            c.x0 = X0Spec::Literal { point };
        }
        if let Some(radius) = self.x0_radius {
            c.x0 = X0Spec::UniformBall { radius };
        }
        if let Some(k) = self.steps {
            c.steps = k;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(d) = &self.delta {
            c.delta = d.clone();
        }
        if let Some(k) = self.k_min {
            c.k_min = k;
        }
        c.stop_on_exit |= self.stop_on_exit;
        c.allow_unit_gamma |= self.allow_unit_gamma;
        c.write_traces &= !self.no_traces;
        if let Some(dir) = &self.out_dir {
            c.output_dir = dir.clone();
        }
        Ok(c)
    }
}

/// Flags shared by the remaining subcommands: `--config` is a JSON object
/// keyed by flag name (underscores for dashes), overridden by explicit flags.
trait Configurable: Serialize + DeserializeOwned {
    fn config_path(&self) -> Option<&Path>;

    fn merged(self) -> Result<Self, HarnessError> {
        let Some(path) = self.config_path().map(Path::to_path_buf) else {
            return Ok(self);
        };
        let mut base: serde_json::Value = serde_json::from_slice(&std::fs::read(&path)?)?;
        let obj = base
            .as_object_mut()
            .ok_or_else(|| HarnessError::Config(format!("{} is not a JSON object", path.display())))?;
        if let serde_json::Value::Object(flags) = serde_json::to_value(&self)? {
            for (k, v) in flags {
                if !v.is_null() {
                    obj.insert(k, v);
                }
            }
        }
        Ok(serde_json::from_value(base)?)
    }
}

macro_rules! configurable {
    ($t:ty) => {
        impl Configurable for $t {
            fn config_path(&self) -> Option<&Path> {
                self.config.as_deref()
            }
        }
    };
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegularityArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// a, b_le, b_eq, b_ge, strong_a, strong_b_le, strong_b_eq, strong_b_ge or aiming.
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    /// Number of dyadic shells.
    #[arg(long)]
    radii: Option<usize>,
    /// Largest shell radius.
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Verdict counted as a pass (default holds).
    #[arg(long, value_parser = parse_verdict)]
    expect: Option<Verdict>,
    #[arg(long)]
    out: Option<PathBuf>,
}
configurable!(RegularityArgs);

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShadowArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Defaults to the problem recorded with the trace.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    /// Write the full shadow sequence as JSONL.
    #[arg(long)]
    out: Option<PathBuf>,
}
configurable!(ShadowArgs);

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitRatesArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    glob: Option<String>,
    #[arg(long)]
    kmin: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    problem: Option<String>,
    /// Write `k,mean_dist2,surviving_trials` here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}
configurable!(FitRatesArgs);

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EscapeArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    mapping: Option<MappingKind>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    noise_r: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Defaults to delta / 10.
    #[arg(long)]
    x0_radius: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Convergence tolerance for local minimizers.
    #[arg(long)]
    tol: Option<f64>,
    /// Required fraction (default 0.99 escapes, 0.95 convergence).
    #[arg(long)]
    min_fraction: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}
configurable!(EscapeArgs);

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// fast or full.
    #[arg(long)]
    tier: Option<String>,
    /// Comma-separated criterion numbers.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
    /// Scratch directory for determinism runs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}
configurable!(AcceptArgs);

fn required<T>(v: Option<T>, flag: &str) -> Result<T, HarnessError> {
    v.ok_or_else(|| HarnessError::Config(format!("missing --{flag}")))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn cmd_run(args: RunArgs, workers: Option<usize>) -> Result<bool, HarnessError> {
    let config = args.experiment()?;
    let Some(out) = &args.out else {
        let exec = RayonExecutor::new(workers);
        let manifest = run_experiment(&config, &exec, Some(exec.workers()))?;
        emit(&manifest, None)?;
        return Ok(true);
    };
    let p = config.validate()?;
    let anchor = p.manifold()?.anchor().to_vec();
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
        grid: vec![],
        stop_on_exit: false,
    };
    let spec = setup.spec(args.trial);
    let x0 = setup.x0(args.trial)?;
    let mut writer = TraceWriter::create(out, TraceMeta { problem: p.label.clone(), spec, x0: x0.clone() })?;
    let mut tau = None;
    let mut last = None;
    for rec in Iteration::new(&p, spec, x0)? {
        let rec = rec?;
        if tau.is_none() && saddlescape::linalg::dist(&rec.x, &anchor) > config.delta[0] {
            tau = Some(rec.k);
        }
        writer.push(&rec)?;
        last = Some(rec);
    }
    writer.finish()?;
    let last = last.expect("at least one step");
    let x_final = saddlescape::linalg::axpy(&last.x, -spec.schedule.step(last.k), &last.g);
    emit(
        &serde_json::json!({
            "trace": out,
            "steps": last.k,
            "final_x": x_final,
            "final_dist": p.manifold()?.distance(&x_final),
            "delta": config.delta[0],
            "stopping_time": encode_stopping_time(tau, config.steps),
        }),
        None,
    )?;
    Ok(true)
}

fn cmd_regularity(args: RegularityArgs) -> Result<bool, HarnessError> {
    let a = args.merged()?;
    let p = problem_by_label(&required(a.problem, "problem")?)?;
    let condition = required(a.condition, "condition")?;
    let ladder = SampleLadder::dyadic(a.r0.unwrap_or(0.25), a.radii.unwrap_or(8), a.samples.unwrap_or(256), a.seed.unwrap_or(0));
    let report = check(&p, condition, &ladder)?;
    emit(&report, a.out.as_deref())?;
    Ok(report.verdict == a.expect.unwrap_or(Verdict::Holds))
}

#[derive(Serialize)]
struct ShadowSummary {
    problem: String,
    delta: f64,
    steps: usize,
    in_ball_steps: usize,
    max_residual: f64,
    max_error_norm: f64,
    /// `max |E_k| / ((1 + r)^2 (dist + alpha_k))` over in-ball steps.
    max_error_ratio: f64,
}

fn cmd_shadow(args: ShadowArgs) -> Result<bool, HarnessError> {
    let a = args.merged()?;
    let (meta, trace) = read_trace_jsonl(&required(a.trace, "trace")?)?;
    let p = problem_by_label(a.problem.as_deref().unwrap_or(&meta.problem))?;
    let delta = a.delta.unwrap_or(0.1);
    let records = shadow_sequence(&trace, &p, delta)?;
    let inside: Vec<_> = records.iter().filter(|r| r.in_ball).collect();
    let summary = ShadowSummary {
        problem: p.label.clone(),
        delta,
        steps: records.len(),
        in_ball_steps: inside.len(),
        max_residual: inside.iter().map(|r| r.residual).fold(0.0, f64::max),
        max_error_norm: inside.iter().map(|r| r.e_norm).fold(0.0, f64::max),
        max_error_ratio: error_bound_ratios(&records, trace.spec.noise.radius()).into_iter().fold(0.0, f64::max),
    };
    if let Some(out) = &a.out {
        let mut text = String::new();
        for r in &records {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        std::fs::write(out, text)?;
    }
    emit(&summary, None)?;
    Ok(summary.max_residual <= 1e-10)
}

fn cmd_fit_rates(args: FitRatesArgs) -> Result<bool, HarnessError> {
    let a = args.merged()?;
    let pattern = required(a.glob, "glob")?;
    let paths = glob::glob(&pattern).map_err(|e| HarnessError::Config(format!("bad glob: {e}")))?;
    let mut traces = Vec::new();
    let mut problem = a.problem;
    for path in paths {
        let path = path.map_err(|e| HarnessError::Io(e.into()))?;
        let (meta, trace) = read_trace_jsonl(&path)?;
        problem.get_or_insert(meta.problem);
        traces.push(trace);
    }
    if traces.len() < MIN_TRACES {
        return Err(HarnessError::Config(format!("need at least {MIN_TRACES} traces, matched {}", traces.len())));
    }
    let p = problem_by_label(&required(problem, "problem")?)?;
    let horizon = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let grid = log_grid(1, horizon, 20);
    let outcomes = outcomes_from_traces(&traces, &p, a.delta.unwrap_or(0.5), &grid)?;
    let fit = rate_fit_from_outcomes(&outcomes, &grid, a.kmin.unwrap_or(1000));
    if let Some(csv) = &a.csv {
        std::fs::write(csv, summary_csv(&summary_rows(&outcomes, &grid)))?;
    }
    emit(&fit, a.out.as_deref())?;
    Ok(fit.status == FitStatus::Ok)
}

fn cmd_escape(args: EscapeArgs, workers: Option<usize>) -> Result<bool, HarnessError> {
    let a = args.merged()?;
    let p = problem_by_label(&required(a.problem, "problem")?)?;
    let gamma = a.gamma.unwrap_or(0.7);
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(HarnessError::Config(format!("escape runs need gamma in (1/2, 1), got {gamma}")));
    }
    let delta = a.delta.unwrap_or(0.5);
    let steps = a.steps.unwrap_or(100_000);
    let exec = RayonExecutor::new(workers);
    let r = a.noise_r.unwrap_or(0.1);
    let setup = TrialSetup {
        problem: &p,
        mapping: a.mapping.unwrap_or(MappingKind::Subgradient),
        schedule: StepSchedule::new(a.c1.unwrap_or(0.1), gamma),
        noise: if r == 0.0 { NoiseModel::Zero } else { NoiseModel::UniformBall { r } },
        steps,
        seed: a.seed.unwrap_or(0),
        x0_radius: a.x0_radius.unwrap_or(delta / 10.0),
        x0_center: None,
        delta,
        grid: summary_grid(steps),
        stop_on_exit: p.classification == Classification::ActiveStrictSaddle,
    };
    let trials = a.trials.unwrap_or(200);
    let anchor = p.manifold()?.anchor().to_vec();
    let outcomes = match p.classification {
        Classification::NonRegularExample => {
            return Err(HarnessError::Config(format!("{} is neither a saddle nor a minimizer", p.label)));
        }
        _ => run_trials(&setup, trials, &exec)?,
    };
    let (passed, report) = if p.classification == Classification::ActiveStrictSaddle {
        let stats = EscapeStats::from_outcomes(&outcomes, delta, steps);
        let ok = stats.median_reached && stats.escaped_fraction >= a.min_fraction.unwrap_or(0.99);
        (ok, serde_json::to_value(&stats)?)
    } else {
        let stats = ConvergenceStats::from_outcomes(&outcomes, &anchor, delta, a.tol.unwrap_or(0.05), steps);
        (stats.converged_fraction >= a.min_fraction.unwrap_or(0.95), serde_json::to_value(&stats)?)
    };
    if let Some(csv) = &a.csv {
        std::fs::write(csv, summary_csv(&summary_rows(&outcomes, &setup.grid)))?;
    }
    emit(&report, a.out.as_deref())?;
    Ok(passed)
}

fn cmd_accept(args: AcceptArgs, workers: Option<usize>) -> Result<bool, HarnessError> {
    let a = args.merged()?;
    let tier: Tier = a.tier.as_deref().unwrap_or("fast").parse()?;
    let scratch = a
        .out_dir
        .unwrap_or_else(|| std::env::temp_dir().join(format!("saddlescape-accept-{}", std::process::id())));
    std::fs::create_dir_all(&scratch)?;
    let exec = RayonExecutor::new(workers);
    let report = acceptance_suite(tier, &exec, &scratch, a.only.as_deref().unwrap_or(&[]));
    for e in &report.entries {
        println!("{}", e.line());
    }
    println!("{:.1} s", report.wall_clock_seconds);
    if let Some(path) = &a.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(report.all_passed())
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run(a) => cmd_run(a, cli.workers),
        Command::CheckRegularity(a) => cmd_regularity(a),
        Command::Shadow(a) => cmd_shadow(a),
        Command::FitRates(a) => cmd_fit_rates(a),
        Command::Escape(a) => cmd_escape(a, cli.workers),
        Command::Accept(a) => cmd_accept(a, cli.workers),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
