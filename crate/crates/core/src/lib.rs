//! Perturbed subgradient-type methods near active manifolds.
//!
//! The crate is organised in five layers:
//!
//! - [`problems`]: objective and manifold oracles, the built-in problem zoo,
//!   linear tilts and spectral lifts of symmetric sets.
//! - [`regularity`]: sample-based checkers for the Whitney/Verdier-type
//!   conditions (a), (b), strong (a), strong (b) and for proximal aiming.
//! - [`solvers`]: the subgradient, projected subgradient and proximal gradient
//!   mappings, the uniform-ball noise model, step schedules and the perturbed
//!   iteration `x_{k+1} = x_k - a_k G(x_k, nu_k)`.
//! - [`diagnostics`]: shadow sequence extraction, distance-decay fits,
//!   escape statistics, Lyapunov certificates and recursion-lemma oracles.
//! - `harness` (feature `harness`): experiment configuration, parallel trial
//!   orchestration, file output and the acceptance suite.

pub mod diagnostics;
pub mod eigen;
pub mod linalg;
pub mod problems;
pub mod regularity;
pub mod rng;
pub mod solvers;

#[cfg(feature = "harness")]
pub mod harness;

pub use problems::{Classification, Manifold, Objective, Point, ProblemInstance};
pub use solvers::{GradientMapping, MappingKind, NoiseModel, StepSchedule};
