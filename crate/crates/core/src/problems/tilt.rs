use super::{Manifold, Objective, Point, ProblemError, ProblemInstance, SetGeometry};
use crate::linalg::{self, SquareMatrix};
use std::sync::Arc;

struct TiltedObjective {
    inner: Arc<dyn Objective>,
    v: Point,
}

impl Objective for TiltedObjective {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x) - linalg::dot(&self.v, x)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.inner.in_domain(x)
    }

    fn subgrad(&self, x: &[f64]) -> Point {
        linalg::sub(&self.inner.subgrad(x), &self.v)
    }

    fn subgrad_generators(&self, x: &[f64]) -> Vec<Point> {
        self.inner
            .subgrad_generators(x)
            .iter()
            .map(|g| linalg::sub(g, &self.v))
            .collect()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        self.inner.lipschitz_bound().map(|l| l + linalg::norm(&self.v))
    }

    fn smooth_subgrad(&self, x: &[f64]) -> Point {
        linalg::sub(&self.inner.smooth_subgrad(x), &self.v)
    }

    fn prox(&self, x: &[f64], alpha: f64) -> Option<Point> {
        self.inner.prox(x, alpha)
    }

    fn project_constraint(&self, x: &[f64]) -> Option<Point> {
        self.inner.project_constraint(x)
    }

    fn set_geometry(&self) -> Option<&dyn SetGeometry> {
        self.inner.set_geometry()
    }
}

struct TiltedManifold {
    inner: Arc<dyn Manifold>,
    v: Point,
}

impl Manifold for TiltedManifold {
    fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim()
    }

    fn project(&self, x: &[f64]) -> Point {
        self.inner.project(x)
    }

    fn tangent_project(&self, base: &[f64], w: &[f64]) -> Point {
        self.inner.tangent_project(base, w)
    }

    fn cov_grad(&self, y: &[f64]) -> Point {
        let shift = self.inner.tangent_project(y, &self.v);
        linalg::sub(&self.inner.cov_grad(y), &shift)
    }

    fn cov_hess(&self, y: &[f64]) -> SquareMatrix {
        self.inner.cov_hess(y)
    }

    fn anchor(&self) -> &[f64] {
        self.inner.anchor()
    }

    fn validity_radius(&self) -> f64 {
        self.inner.validity_radius()
    }

    fn distance(&self, x: &[f64]) -> f64 {
        self.inner.distance(x)
    }

    fn tangent_basis(&self, y: &[f64]) -> Vec<Point> {
        self.inner.tangent_basis(y)
    }
}

/// `f_v = f - <v, .>`; the manifold is kept and its covariant gradient
/// shifted by the tangent part of `-v`.
pub fn tilt(p: &ProblemInstance, v: &[f64]) -> Result<ProblemInstance, ProblemError> {
    p.check_dim(v)?;
    let manifold = p.manifold.as_ref().map(|m| {
        Arc::new(TiltedManifold {
            inner: Arc::clone(m),
            v: v.to_vec(),
        }) as Arc<dyn Manifold>
    });
    Ok(ProblemInstance {
        label: format!("tilt({})", p.label),
        objective: Arc::new(TiltedObjective {
            inner: Arc::clone(&p.objective),
            v: v.to_vec(),
        }),
        manifold,
        classification: p.classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::problem_by_label;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_tilt_is_identity() {
        let z1 = problem_by_label("Z1").unwrap();
        let t = tilt(&z1, &[0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = z1.sample_shell(&mut rng, 0.3);
            assert_eq!(t.objective.value(&x), z1.objective.value(&x));
            assert_eq!(t.objective.subgrad(&x), z1.objective.subgrad(&x));
            let (m, tm) = (z1.manifold().unwrap(), t.manifold().unwrap());
            assert_eq!(tm.project(&x), m.project(&x));
            let y = m.project(&x);
            assert_eq!(tm.cov_grad(&y), m.cov_grad(&y));
        }
    }

    #[test]
    fn tilt_shifts_subgradient() {
        let z2 = problem_by_label("Z2").unwrap();
        let t = tilt(&z2, &[0.1, 0.0]).unwrap();
        let g = t.objective.subgrad(&[0.5, 0.0]);
        assert!((g[0] - 0.9).abs() < 1e-15 && g[1] == 0.0);
        assert_eq!(t.label, "tilt(Z2)");
    }

    #[test]
    fn tilt_rejects_wrong_dimension() {
        let z2 = problem_by_label("Z2").unwrap();
        assert!(matches!(
            tilt(&z2, &[0.1]),
            Err(ProblemError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    proptest! {
        #[test]
        fn tilt_value_identity(v in prop::collection::vec(-1.0f64..1.0, 2), x in prop::collection::vec(-1.0f64..1.0, 2)) {
            let z1 = problem_by_label("Z1").unwrap();
            let t = tilt(&z1, &v).unwrap();
            let back = t.objective.value(&x) + linalg::dot(&v, &x);
            prop_assert!((back - z1.objective.value(&x)).abs() <= 1e-14);
            let y = z1.manifold().unwrap().project(&x);
            let shifted = t.manifold().unwrap().cov_grad(&y);
            prop_assert!((shifted[1] - (z1.manifold().unwrap().cov_grad(&y)[1] - v[1])).abs() <= 1e-15);
            prop_assert_eq!(shifted[0], 0.0);
        }
    }
}
