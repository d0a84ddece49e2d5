use super::{GradientMapping, MappingKind, NoiseModel, SolverError, StepSchedule};
use crate::linalg;
use crate::problems::{Point, ProblemInstance};
use crate::rng::StreamRng;
use serde::{Deserialize, Serialize};

/// Everything except the problem and the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub mapping: MappingKind,
    pub schedule: StepSchedule,
    pub noise: NoiseModel,
    pub steps: usize,
    pub seed: u64,
    pub trial: u64,
}

impl RunSpec {
    /// Random stream for this trial. Counter 0 is reserved for the starting
    /// point; step `k` draws its noise at counter `k`.
    pub fn stream(&self) -> StreamRng {
        StreamRng::new(self.seed, self.trial)
    }
}

/// State at step `k` together with the noise and mapping output used to
/// produce step `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub x: Point,
    pub nu: Point,
    pub g: Point,
    pub dist: Option<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub spec: RunSpec,
    pub records: Vec<StepRecord>,
}

impl IterateTrace {
    pub fn step(&self, k: usize) -> f64 {
        self.spec.schedule.step(k)
    }

    pub fn final_point(&self) -> Option<Point> {
        self.records
            .last()
            .map(|r| linalg::axpy(&r.x, -self.step(r.k), &r.g))
    }
}

/// Streaming form of [`run`]: yields one record per step, so long horizons
/// can be reduced on the fly without keeping the trace.
pub struct Iteration<'a> {
    problem: &'a ProblemInstance,
    mapping: GradientMapping<'a>,
    spec: RunSpec,
    stream: StreamRng,
    x: Point,
    k: usize,
    failed: bool,
}

impl<'a> Iteration<'a> {
    pub fn new(problem: &'a ProblemInstance, spec: RunSpec, x0: Point) -> Result<Self, SolverError> {
        spec.schedule.validate()?;
        spec.noise.validate()?;
        problem.check_dim(&x0)?;
        if spec.steps == 0 {
            return Err(SolverError::EmptyHorizon);
        }
        if !problem.objective.in_domain(&x0) {
            return Err(SolverError::OffDomain { k: 1 });
        }
        Ok(Self {
            problem,
            mapping: GradientMapping::new(spec.mapping, problem.objective.as_ref()),
            spec,
            stream: spec.stream(),
            x: x0,
            k: 1,
            failed: false,
        })
    }

    pub fn current(&self) -> &[f64] {
        &self.x
    }

    fn advance(&mut self) -> Result<StepRecord, SolverError> {
        let k = self.k;
        let d = self.x.len();
        if !linalg::all_finite(&self.x) {
            return Err(SolverError::NonFinite { k });
        }
        if !self.problem.objective.in_domain(&self.x) {
            return Err(SolverError::OffDomain { k });
        }
        let nu = self.spec.noise.sample(&mut self.stream.at(k as u64), d);
        let alpha = self.spec.schedule.step(k);
        let g = self.mapping.apply(alpha, &self.x, &nu).map_err(|e| match e {
            SolverError::OffDomain { .. } => SolverError::OffDomain { k },
            other => other,
        })?;
        let next = linalg::axpy(&self.x, -alpha, &g);
        let record = StepRecord {
            k,
            dist: self.problem.manifold.as_ref().map(|m| m.distance(&self.x)),
            f: self.problem.objective.value(&self.x),
            x: std::mem::replace(&mut self.x, next),
            nu,
            g,
        };
        self.k += 1;
        Ok(record)
    }
}

impl Iterator for Iteration<'_> {
    type Item = Result<StepRecord, SolverError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.k > self.spec.steps {
            return None;
        }
        let out = self.advance();
        self.failed = out.is_err();
        Some(out)
    }
}

pub fn run(problem: &ProblemInstance, spec: RunSpec, x0: Point) -> Result<IterateTrace, SolverError> {
    let records = Iteration::new(problem, spec, x0)?.collect::<Result<Vec<_>, _>>()?;
    Ok(IterateTrace { spec, records })
}

/// First recorded index `j >= k0` with `|x_j - center| > delta`.
pub fn stopping_time(trace: &IterateTrace, center: &[f64], delta: f64, k0: usize) -> Option<usize> {
    trace
        .records
        .iter()
        .find(|r| r.k >= k0 && linalg::dist(&r.x, center) > delta)
        .map(|r| r.k)
}

/// Finite encoding used in files: "never" becomes `horizon + 1`.
pub fn encode_stopping_time(tau: Option<usize>, horizon: usize) -> usize {
    tau.unwrap_or(horizon + 1)
}
