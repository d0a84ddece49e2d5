use super::HarnessError;
use crate::problems::{problem_by_label, Classification, Point, ProblemInstance};
use crate::solvers::{MappingKind, NoiseModel, StepSchedule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum X0Spec {
    /// The same starting point for every trial.
    Literal { point: Point },
    /// Uniform in `B_radius(anchor)`, drawn per trial.
    UniformBall { radius: f64 },
}

fn default_true() -> bool {
    true
}

fn default_k_min() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    pub mapping: MappingKind,
    pub schedule: StepSchedule,
    pub noise: NoiseModel,
    pub x0: X0Spec,
    pub trials: u64,
    pub steps: usize,
    /// Ball radii around the anchor for stopping times. The first entry also
    /// drives the summary table and `stop_on_exit`.
    pub delta: Vec<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Stop each trial at its first exit from the first ball.
    #[serde(default)]
    pub stop_on_exit: bool,
    /// Lower end of the rate fit.
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    /// Distance tolerance for counting a local-min trial as converged.
    #[serde(default)]
    pub converge_tol: Option<f64>,
    #[serde(default = "default_true")]
    pub write_traces: bool,
    /// Permit `gamma = 1` on saddle instances.
    #[serde(default)]
    pub allow_unit_gamma: bool,
}

impl ExperimentConfig {
    /// Subgradient mapping, gamma 0.7, c1 0.1, r 0.1, x0 uniform in B_0.05.
    pub fn template(problem: &str) -> Self {
        Self {
            problem: problem.to_string(),
            mapping: MappingKind::Subgradient,
            schedule: StepSchedule::new(0.1, 0.7),
            noise: NoiseModel::UniformBall { r: 0.1 },
            x0: X0Spec::UniformBall { radius: 0.05 },
            trials: 1,
            steps: 1000,
            delta: vec![0.5],
            seed: 0,
            output_dir: PathBuf::from("runs"),
            stop_on_exit: false,
            k_min: default_k_min(),
            converge_tol: None,
            write_traces: true,
            allow_unit_gamma: false,
        }
    }

    /// Checks every invariant and resolves the problem instance.
    pub fn validate(&self) -> Result<ProblemInstance, HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let p = problem_by_label(&self.problem)?;
        self.schedule.validate()?;
        self.noise.validate()?;
        if p.classification == Classification::ActiveStrictSaddle
            && self.schedule.gamma >= 1.0
            && !self.allow_unit_gamma
        {
            return bad("escape experiments need gamma < 1 (set allow_unit_gamma to override)".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.steps < 10 {
            return bad(format!("steps must be at least 10, got {}", self.steps));
        }
        if self.delta.is_empty() || self.delta.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("delta must be a non-empty list of positive radii".into());
        }
        p.manifold()?;
        match &self.x0 {
            X0Spec::Literal { point } => {
                p.check_dim(point)?;
                if !p.objective.in_domain(point) {
                    return bad("literal x0 is outside the domain".into());
                }
            }
            X0Spec::UniformBall { radius } if !(*radius >= 0.0 && radius.is_finite()) => {
                return bad(format!("x0 radius must be nonnegative, got {radius}"));
            }
            X0Spec::UniformBall { .. } => {}
        }
        Ok(p)
    }

    pub fn x0_radius(&self) -> f64 {
        match self.x0 {
            X0Spec::UniformBall { radius } => radius,
            X0Spec::Literal { .. } => 0.0,
        }
    }

    /// SHA-256 of the compact JSON form without `output_dir`. Object keys
    /// serialize in sorted order, so equal configs hash equally.
    pub fn content_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_hashes_stably() {
        let mut c = ExperimentConfig::template("Z1");
        c.x0 = X0Spec::Literal { point: vec![0.0, 0.01] };
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.content_hash(), c.content_hash());
        c.output_dir = "elsewhere".into();
        assert_eq!(back.content_hash(), c.content_hash());
        c.seed = 1;
        assert_ne!(back.content_hash(), c.content_hash());
    }

    #[test]
    fn rejects_invalid_settings() {
        let base = ExperimentConfig::template("Z1");
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.schedule.gamma = 0.4;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.schedule.gamma = 1.0;
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
        c.allow_unit_gamma = true;
        assert!(c.validate().is_ok());
        let mut c = base.clone();
        c.steps = 5;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.problem = "Z9".into();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::template("Z2");
        c.schedule.gamma = 1.0;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(ExperimentConfig::template("Z1")).unwrap();
        v["gama"] = serde_json::json!(0.7);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }
}
