use super::SolverError;
use crate::linalg;
use crate::problems::{Objective, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    Subgradient,
    ProjectedSubgradient,
    ProximalGradient,
}

impl std::str::FromStr for MappingKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "subgradient" => Ok(Self::Subgradient),
            "projected_subgradient" | "projected" => Ok(Self::ProjectedSubgradient),
            "proximal_gradient" | "proximal" => Ok(Self::ProximalGradient),
            other => Err(format!("unknown mapping `{other}`")),
        }
    }
}

/// `G_alpha(x, nu)` for one of the three update rules.
#[derive(Clone, Copy)]
pub struct GradientMapping<'a> {
    pub kind: MappingKind,
    objective: &'a dyn Objective,
}

impl<'a> GradientMapping<'a> {
    pub fn new(kind: MappingKind, objective: &'a dyn Objective) -> Self {
        Self { kind, objective }
    }

    pub fn apply(&self, alpha: f64, x: &[f64], nu: &[f64]) -> Result<Point, SolverError> {
        match self.kind {
            MappingKind::Subgradient => self.subgradient(x, nu),
            MappingKind::ProjectedSubgradient => self.projected(alpha, x, nu),
            MappingKind::ProximalGradient => self.proximal(alpha, x, nu),
        }
    }

    /// `s(x) + nu`
    fn subgradient(&self, x: &[f64], nu: &[f64]) -> Result<Point, SolverError> {
        if !self.objective.in_domain(x) {
            return Err(SolverError::OffDomain { k: 0 });
        }
        Ok(linalg::add(&self.objective.subgrad(x), nu))
    }

    /// `(x - P_X(x - alpha (s_g(x) + nu))) / alpha`
    fn projected(&self, alpha: f64, x: &[f64], nu: &[f64]) -> Result<Point, SolverError> {
        if !self.objective.in_domain(x) {
            return Err(SolverError::OffConstraint);
        }
        let v = linalg::add(&self.objective.smooth_subgrad(x), nu);
        let target = linalg::axpy(x, -alpha, &v);
        let next = self.objective.project_constraint(&target).unwrap_or(target);
        Ok(linalg::scale(&linalg::sub(x, &next), 1.0 / alpha))
    }

    /// `(x - prox_{alpha h}(x - alpha (grad g(x) + nu))) / alpha`
    fn proximal(&self, alpha: f64, x: &[f64], nu: &[f64]) -> Result<Point, SolverError> {
        let v = linalg::add(&self.objective.smooth_subgrad(x), nu);
        let target = linalg::axpy(x, -alpha, &v);
        let next = self
            .objective
            .prox(&target, alpha)
            .ok_or(SolverError::MissingProx)?;
        Ok(linalg::scale(&linalg::sub(x, &next), 1.0 / alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem_by_label, QuadraticL1};
    use crate::linalg::SquareMatrix;
    use proptest::prelude::*;

    /// `<(1, 1), x>` on the nonnegative orthant.
    struct LinearOnOrthant;

    impl Objective for LinearOnOrthant {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            if x.iter().all(|&v| v >= 0.0) {
                x[0] + x[1]
            } else {
                f64::INFINITY
            }
        }
        fn subgrad(&self, _x: &[f64]) -> Point {
            vec![1.0, 1.0]
        }
        fn project_constraint(&self, x: &[f64]) -> Option<Point> {
            Some(x.iter().map(|v| v.max(0.0)).collect())
        }
    }

    /// A smooth quadratic with no constraint and no prox.
    struct Bowl;

    impl Objective for Bowl {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0] + 3.0 * x[1] * x[1] + x[0] * x[1]
        }
        fn subgrad(&self, x: &[f64]) -> Point {
            vec![2.0 * x[0] + x[1], 6.0 * x[1] + x[0]]
        }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn subgradient_mapping_examples() {
        let z1 = problem_by_label("Z1").unwrap();
        let g = GradientMapping::new(MappingKind::Subgradient, z1.objective.as_ref());
        assert!(close(&g.apply(0.1, &[0.5, 0.3], &[0.0, 0.0]).unwrap(), &[1.0, -0.6], 1e-15));
        assert!(close(&g.apply(0.1, &[0.0, 1.0], &[0.05, 0.0]).unwrap(), &[0.05, -2.0], 1e-15));
        assert_eq!(
            g.apply(0.1, &[0.2, -0.4], &[0.01, 0.02]).unwrap(),
            g.apply(0.01, &[0.2, -0.4], &[0.01, 0.02]).unwrap()
        );
    }

    #[test]
    fn subgradient_mapping_rejects_off_domain() {
        let z3 = problem_by_label("Z3").unwrap();
        let g = GradientMapping::new(MappingKind::Subgradient, z3.objective.as_ref());
        assert!(g.apply(0.1, &[0.0, 1.0, 0.0], &[0.0; 3]).is_err());
    }

    #[test]
    fn projected_mapping_clamps_on_orthant() {
        let g = GradientMapping::new(MappingKind::ProjectedSubgradient, &LinearOnOrthant);
        let out = g.apply(0.1, &[0.2, 0.0], &[0.0, 0.0]).unwrap();
        assert!(close(&out, &[1.0, 0.0], 1e-12));
        assert!(matches!(
            g.apply(0.1, &[-0.2, 0.0], &[0.0, 0.0]),
            Err(SolverError::OffConstraint)
        ));
    }

    #[test]
    fn proximal_mapping_soft_threshold() {
        let h = QuadraticL1::l1_only(1.0, 1);
        let g = GradientMapping::new(MappingKind::ProximalGradient, &h);
        let out = g.apply(0.2, &[0.5], &[0.0]).unwrap();
        assert!((out[0] - 1.0).abs() < 1e-12);
        let missing = GradientMapping::new(MappingKind::ProximalGradient, &Bowl);
        assert!(matches!(missing.apply(0.1, &[0.0, 0.0], &[0.0, 0.0]), Err(SolverError::MissingProx)));
    }

    #[test]
    fn proximal_mapping_with_zero_h_is_gradient() {
        let q = QuadraticL1 {
            q: SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 6.0]]).unwrap(),
            lin: vec![0.0, 0.0],
            c0: 0.0,
            lambda: 0.0,
        };
        let g = GradientMapping::new(MappingKind::ProximalGradient, &q);
        let x = [0.3, -0.7];
        let nu = [0.01, -0.02];
        let out = g.apply(0.05, &x, &nu).unwrap();
        let want = linalg::add(&Bowl.subgrad(&x), &nu);
        assert!(close(&out, &want, 1e-12));
    }

    #[test]
    fn projected_z3_step_matches_grid_search() {
        let z3 = problem_by_label("Z3").unwrap();
        let g = GradientMapping::new(MappingKind::ProjectedSubgradient, z3.objective.as_ref());
        let x = [0.3, 0.05, 0.1];
        let (alpha, nu) = (0.5, [0.1, -0.6, 0.2]);
        let out = g.apply(alpha, &x, &nu).unwrap();
        let next = linalg::axpy(&x, -alpha, &out);
        let target = linalg::axpy(&x, -alpha, &linalg::add(&[0.0, -1.0, 0.0], &nu));
        // Grid over (x, y) of the boundary surface z = max(0, y - x^2).
        let mut best = (f64::INFINITY, vec![]);
        let n = 600;
        for i in 0..=n {
            for j in 0..=n {
                let a = -0.5 + 1.5 * i as f64 / n as f64;
                let b = -0.5 + 1.5 * j as f64 / n as f64;
                let p = vec![a, b, (b - a * a).max(0.0)];
                let d = linalg::dist(&p, &target);
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        let grid_out = linalg::scale(&linalg::sub(&x, &best.1), 1.0 / alpha);
        assert!(close(&out, &grid_out, 1e-2), "{out:?} vs {grid_out:?}");
        assert!(linalg::dist(&next, &target) <= best.0 + 1e-12);
    }

    #[test]
    fn proximal_z7_step_matches_grid_search() {
        let z7 = problem_by_label("Z7").unwrap();
        let g = GradientMapping::new(MappingKind::ProximalGradient, z7.objective.as_ref());
        let x = [0.04, 1.9];
        let (alpha, nu) = (0.1, [0.03, -0.01]);
        let out = g.apply(alpha, &x, &nu).unwrap();
        let next = linalg::axpy(&x, -alpha, &out);
        let grad = linalg::add(&z7.objective.smooth_subgrad(&x), &nu);
        let target = linalg::axpy(&x, -alpha, &grad);
        let sub = |y: &[f64]| (y[0].abs() + y[1].abs()) + linalg::dist(y, &target).powi(2) / (2.0 * alpha);
        let mut best = (f64::INFINITY, vec![]);
        for i in -300..=300 {
            for j in -300..=300 {
                let y = vec![target[0] + i as f64 * 5e-4, target[1] + j as f64 * 5e-4];
                let v = sub(&y);
                if v < best.0 {
                    best = (v, y);
                }
            }
        }
        assert!(close(&next, &best.1, 1e-3), "{next:?} vs {:?}", best.1);
    }

    proptest! {
        #[test]
        fn three_mappings_agree_without_nonsmooth_part(
            x in prop::collection::vec(-1.0f64..1.0, 2),
            nu in prop::collection::vec(-0.1f64..0.1, 2),
            alpha in 1e-3f64..1.0,
        ) {
            let q = QuadraticL1 {
                q: SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 6.0]]).unwrap(),
                lin: vec![0.0, 0.0],
                c0: 0.0,
                lambda: 0.0,
            };
            let a = GradientMapping::new(MappingKind::Subgradient, &Bowl).apply(alpha, &x, &nu).unwrap();
            let b = GradientMapping::new(MappingKind::ProjectedSubgradient, &Bowl).apply(alpha, &x, &nu).unwrap();
            let c = GradientMapping::new(MappingKind::ProximalGradient, &q).apply(alpha, &x, &nu).unwrap();
            prop_assert!(close(&a, &b, 1e-12));
            prop_assert!(close(&a, &c, 1e-12));
        }

        #[test]
        fn mapping_is_locally_bounded(
            i in 0usize..7,
            raw in prop::collection::vec(-1.0f64..1.0, 3),
            nu_raw in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = &crate::problems::make_zoo()[i];
            let d = p.dim();
            let x = match p.objective.set_geometry() {
                Some(_) => return Ok(()),
                None => linalg::axpy(p.anchor().unwrap(), 0.25, &raw[..d]),
            };
            let kind = if p.objective.prox(&x, 1.0).is_some() {
                MappingKind::ProximalGradient
            } else {
                MappingKind::Subgradient
            };
            let nu = linalg::scale(&nu_raw[..d], 0.1);
            let bound = p.objective.lipschitz_bound().unwrap();
            for alpha in [1.0, 0.1, 0.01] {
                let g = GradientMapping::new(kind, p.objective.as_ref()).apply(alpha, &x, &nu).unwrap();
                prop_assert!(linalg::all_finite(&g));
                prop_assert!(linalg::norm(&g) <= bound * (1.0 + linalg::norm(&nu)) + 1e-12);
            }
        }
    }
}
