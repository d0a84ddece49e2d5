//! Objective and manifold oracles, the problem zoo, tilts and spectral lifts.

mod epi_max;
mod manifold;
mod spectral;
mod tilt;
mod zoo;

pub use epi_max::{project_epi_max, real_roots_depressed_cubic};
pub use manifold::CoordinateManifold;
pub use spectral::{orthant, spectral_lift, SpectralLift, SpectralProjection};
pub use tilt::tilt;
pub use zoo::uniform_in_ball;
pub use zoo::{
    make_zoo, problem_by_label, AbsQuadratic, CartanUmbrella, EpiMaxSet, PowerCurve, QuadraticL1,
    WeaklyConvexL1, ZOO_LABELS,
};

use crate::eigen::sym_eigen;
use crate::linalg::{self, orthonormal_basis, SquareMatrix};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// A point of the ambient space `R^d`.
pub type Point = Vec<f64>;

/// Distance below which a point counts as lying on a manifold or set.
pub const ON_SET_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown problem label `{0}`")]
    UnknownLabel(String),
    #[error("problem `{0}` has no manifold oracle")]
    NoManifold(String),
    #[error("point is {distance:.3e} away from the manifold")]
    OffManifold { distance: f64 },
    #[error("point is outside the validity radius ({distance:.3e} > {radius})")]
    OutsideValidity { distance: f64, radius: f64 },
    #[error("finite-difference step {0} must lie in (0, 1e-2]")]
    BadStep(f64),
    #[error("classification `{0:?}` is inconsistent with the covariant Hessian at the anchor")]
    Classification(Classification),
    #[error(transparent)]
    Matrix(#[from] linalg::MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMin,
    ActiveStrictSaddle,
    NonRegularExample,
}

/// A function `f = g + h` on `R^d` with a Clarke subgradient selection.
///
/// `g` is the locally Lipschitz (often smooth) part and `h` the part handled
/// by a projection or proximal step. Plain objectives leave `h = 0`.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    /// `f(x)`, or `+inf` off the domain.
    fn value(&self, x: &[f64]) -> f64;

    fn in_domain(&self, x: &[f64]) -> bool {
        self.value(x).is_finite()
    }

    /// Deterministic selection of the Clarke subdifferential of `f`.
    fn subgrad(&self, x: &[f64]) -> Point;

    /// Extreme points generating the Clarke subdifferential at `x`.
    fn subgrad_generators(&self, x: &[f64]) -> Vec<Point> {
        vec![self.subgrad(x)]
    }

    /// Local Lipschitz constant on the reference ball around the anchor.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }

    /// Selection of the subdifferential of the `g` part alone.
    fn smooth_subgrad(&self, x: &[f64]) -> Point {
        self.subgrad(x)
    }

    /// `argmin_y h(y) + |y - x|^2 / (2 alpha)`, when `h` has a closed-form prox.
    fn prox(&self, _x: &[f64], _alpha: f64) -> Option<Point> {
        None
    }

    /// Nearest point of the constraint set, when `h` is an indicator.
    fn project_constraint(&self, _x: &[f64]) -> Option<Point> {
        None
    }

    /// Analytic normal-cone data when the instance is studied as a set.
    fn set_geometry(&self) -> Option<&dyn SetGeometry> {
        None
    }
}

/// Normal cones and a sampler for set-valued instances.
pub trait SetGeometry: Send + Sync {
    /// Unit generators of `N_X(x)`; empty at interior or singular points.
    fn unit_normals(&self, x: &[f64]) -> Vec<Point>;

    /// A point of `X` roughly `radius` away from the anchor.
    fn sample_near(&self, rng: &mut dyn RngCore, radius: f64) -> Point;
}

/// Active-manifold oracle: projection, tangent projector and the covariant
/// derivatives of the owning objective along the manifold.
pub trait Manifold: Send + Sync {
    fn ambient_dim(&self) -> usize;

    fn project(&self, x: &[f64]) -> Point;

    /// `P_{T_M(base)} w`
    fn tangent_project(&self, base: &[f64], w: &[f64]) -> Point;

    /// Riemannian gradient of `f` at `y` in ambient coordinates.
    fn cov_grad(&self, y: &[f64]) -> Point;

    /// Riemannian Hessian at `y` as an ambient matrix `P_T H P_T`.
    fn cov_hess(&self, y: &[f64]) -> SquareMatrix;

    fn anchor(&self) -> &[f64];

    fn validity_radius(&self) -> f64;

    fn distance(&self, x: &[f64]) -> f64 {
        linalg::dist(x, &self.project(x))
    }

    fn tangent_basis(&self, y: &[f64]) -> Vec<Point> {
        let d = self.ambient_dim();
        let columns: Vec<Point> = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                self.tangent_project(y, &e)
            })
            .collect();
        orthonormal_basis(&columns, 1e-10)
    }
}

/// Serializable description of a zoo instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMetadata {
    pub label: String,
    pub dimension: usize,
    pub classification: Classification,
    pub anchor: Option<Point>,
    pub validity_radius: Option<f64>,
}

#[derive(Clone)]
pub struct ProblemInstance {
    pub label: String,
    pub objective: Arc<dyn Objective>,
    pub manifold: Option<Arc<dyn Manifold>>,
    pub classification: Classification,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("label", &self.label)
            .field("dimension", &self.dim())
            .field("classification", &self.classification)
            .finish()
    }
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn manifold(&self) -> Result<&dyn Manifold, ProblemError> {
        self.manifold
            .as_deref()
            .ok_or_else(|| ProblemError::NoManifold(self.label.clone()))
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        self.manifold.as_deref().map(|m| m.anchor())
    }

    pub fn is_set_instance(&self) -> bool {
        self.objective.set_geometry().is_some()
    }

    pub fn metadata(&self) -> ProblemMetadata {
        ProblemMetadata {
            label: self.label.clone(),
            dimension: self.dim(),
            classification: self.classification,
            anchor: self.anchor().map(|a| a.to_vec()),
            validity_radius: self.manifold.as_deref().map(|m| m.validity_radius()),
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ProblemError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// A sample at scale `radius` around the anchor: a uniform direction on
    /// the sphere for function instances, the instance sampler for sets.
    pub fn sample_shell(&self, rng: &mut dyn RngCore, radius: f64) -> Point {
        if let Some(geom) = self.objective.set_geometry() {
            return geom.sample_near(rng, radius);
        }
        let anchor = self
            .anchor()
            .map(|a| a.to_vec())
            .unwrap_or_else(|| vec![0.0; self.dim()]);
        let u = random_unit(rng, self.dim());
        linalg::axpy(&anchor, radius, &u)
    }

    /// Eigenvalues of the covariant Hessian at the anchor restricted to the
    /// tangent space, descending.
    pub fn anchor_curvatures(&self) -> Result<Vec<f64>, ProblemError> {
        let m = self.manifold()?;
        let y = m.anchor().to_vec();
        let basis = m.tangent_basis(&y);
        if basis.is_empty() {
            return Ok(vec![]);
        }
        let h = m.cov_hess(&y).restrict(&basis);
        Ok(sym_eigen(&h)?.values)
    }

    /// Checks the classification against the covariant Hessian at the anchor.
    pub fn check_classification(&self) -> Result<(), ProblemError> {
        let bad = Err(ProblemError::Classification(self.classification));
        match self.classification {
            Classification::NonRegularExample => Ok(()),
            Classification::ActiveStrictSaddle => {
                let ev = self.anchor_curvatures()?;
                if ev.iter().any(|&l| l < 0.0) {
                    Ok(())
                } else {
                    bad
                }
            }
            Classification::LocalMin => {
                let ev = self.anchor_curvatures()?;
                if ev.iter().all(|&l| l >= -1e-12) {
                    Ok(())
                } else {
                    bad
                }
            }
        }
    }
}

pub fn random_unit(rng: &mut dyn RngCore, d: usize) -> Point {
    loop {
        let g: Point = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = linalg::normalized(&g) {
            return u;
        }
    }
}

/// Largest deviation between the central second difference of
/// `t -> f(P_M(y + t u))` and `<cov_hess(y) u, u>` over a tangent basis.
pub fn covariant_consistency(p: &ProblemInstance, y: &[f64], h: f64) -> Result<f64, ProblemError> {
    p.check_dim(y)?;
    if !(h > 0.0 && h <= 1e-2) {
        return Err(ProblemError::BadStep(h));
    }
    let m = p.manifold()?;
    let off = m.distance(y);
    if off > 1e-8 {
        return Err(ProblemError::OffManifold { distance: off });
    }
    let from_anchor = linalg::dist(y, m.anchor());
    if from_anchor > m.validity_radius() {
        return Err(ProblemError::OutsideValidity {
            distance: from_anchor,
            radius: m.validity_radius(),
        });
    }
    let hess = m.cov_hess(y);
    let f = |t: f64, u: &[f64]| p.objective.value(&m.project(&linalg::axpy(y, t, u)));
    let worst = m
        .tangent_basis(y)
        .iter()
        .map(|u| {
            let second = (f(h, u) - 2.0 * f(0.0, u) + f(-h, u)) / (h * h);
            (second - hess.quad_form(u)).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// `(f(x) - f(P_M x)) / dist(x, M)`, or `None` on the manifold.
pub fn sharpness_ratio(p: &ProblemInstance, x: &[f64]) -> Result<Option<f64>, ProblemError> {
    let m = p.manifold()?;
    let y = m.project(x);
    let d = linalg::dist(x, &y);
    if d <= ON_SET_TOL {
        return Ok(None);
    }
    Ok(Some((p.objective.value(x) - p.objective.value(&y)) / d))
}
