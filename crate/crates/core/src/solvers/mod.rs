//! Gradient mappings, noise, step schedules and the perturbed iteration.

mod iteration;
mod mapping;
mod trace_io;

pub use iteration::{
    encode_stopping_time, run, stopping_time, IterateTrace, Iteration, RunSpec, StepRecord,
};
pub use mapping::{GradientMapping, MappingKind};
pub use trace_io::{read_trace_jsonl, write_trace_jsonl, TraceMeta, TraceWriter};

use crate::linalg;
use crate::problems::{random_unit, Point, ProblemError};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("iterate left the domain at step {k}")]
    OffDomain { k: usize },
    #[error("point is outside the constraint set")]
    OffConstraint,
    #[error("problem has no proximal operator")]
    MissingProx,
    #[error("non-finite iterate at step {k}")]
    NonFinite { k: usize },
    #[error("invalid step schedule: {0}")]
    Schedule(String),
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace format: {0}")]
    Format(#[from] serde_json::Error),
}

/// `alpha_k = c1 k^-gamma`, with `c2` the declared upper envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub c1: f64,
    pub c2: f64,
    pub gamma: f64,
}

impl StepSchedule {
    pub fn new(c1: f64, gamma: f64) -> Self {
        Self { c1, c2: c1, gamma }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let err = |m: String| Err(SolverError::Schedule(m));
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return err(format!("c1 must be positive, got {}", self.c1));
        }
        if !(self.c2 >= self.c1 && self.c2.is_finite()) {
            return err(format!("c2 = {} must be at least c1 = {}", self.c2, self.c1));
        }
        if !(self.gamma > 0.5 && self.gamma <= 1.0) {
            return err(format!("gamma must lie in (1/2, 1], got {}", self.gamma));
        }
        Ok(())
    }

    pub fn step(&self, k: usize) -> f64 {
        self.c1 * (k as f64).powf(-self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    UniformBall { r: f64 },
    Zero,
}

impl NoiseModel {
    pub fn radius(&self) -> f64 {
        match self {
            NoiseModel::UniformBall { r } => *r,
            NoiseModel::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        match self {
            NoiseModel::UniformBall { r } if !(*r > 0.0 && r.is_finite()) => {
                Err(SolverError::Noise(format!("radius must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// One draw in dimension `d`; uniform on the closed ball of radius `r`.
    pub fn sample(&self, rng: &mut dyn RngCore, d: usize) -> Point {
        match *self {
            NoiseModel::Zero => vec![0.0; d],
            NoiseModel::UniformBall { r } => {
                let u = random_unit(rng, d);
                let rho = r * rng.random::<f64>().powf(1.0 / d as f64);
                let nu = linalg::scale(&u, rho);
                let n = linalg::norm(&nu);
                if n > r {
                    linalg::scale(&nu, r / n)
                } else {
                    nu
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_envelope_and_validation() {
        let s = StepSchedule { c1: 0.1, c2: 0.2, gamma: 0.7 };
        s.validate().unwrap();
        for k in 1..1000 {
            let a = s.step(k);
            let kg = (k as f64).powf(0.7);
            assert!(a >= 0.1 / kg * (1.0 - 1e-15) && a <= 0.2 / kg);
        }
        assert!(StepSchedule::new(0.1, 0.4).validate().is_err());
        assert!(StepSchedule::new(0.1, 1.0).validate().is_ok());
        assert!(StepSchedule { c1: 0.2, c2: 0.1, gamma: 0.7 }.validate().is_err());
    }

    #[test]
    fn uniform_ball_moments() {
        let r = 0.1;
        let noise = NoiseModel::UniformBall { r };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut mean = [0.0; 2];
        let mut fourth = 0.0;
        let mut inside_half = 0usize;
        for _ in 0..n {
            let v = noise.sample(&mut rng, 2);
            let norm = linalg::norm(&v);
            assert!(norm <= r);
            mean[0] += v[0];
            mean[1] += v[1];
            fourth += norm.powi(4);
            inside_half += (norm <= r / 2.0) as usize;
        }
        let nf = n as f64;
        let mean = [mean[0] / nf, mean[1] / nf];
        assert!(linalg::norm(&mean) <= 3.0 * r / nf.sqrt());
        // Per-coordinate standard deviation of the uniform disc is r/2.
        let sigma = r / 2.0 / nf.sqrt();
        assert!(mean.iter().all(|m| m.abs() <= 4.0 * sigma));
        assert!(fourth / nf <= r.powi(4));
        // Area fraction of the half-radius disc is 1/4.
        let frac = inside_half as f64 / nf;
        assert!((frac - 0.25).abs() < 0.01, "{frac}");
    }

    #[test]
    fn noise_serializes_with_kind_tag() {
        let s = serde_json::to_string(&NoiseModel::UniformBall { r: 0.1 }).unwrap();
        assert_eq!(s, r#"{"kind":"uniform_ball","r":0.1}"#);
        let z: NoiseModel = serde_json::from_str(r#"{"kind":"zero"}"#).unwrap();
        assert_eq!(z, NoiseModel::Zero);
    }
}
