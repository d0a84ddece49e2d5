//! Built-in problem instances, addressable by label.
//!
//! | label | instance | manifold | classification |
//! |-------|----------|----------|----------------|
//! | Z1 | `|x| - y^2` | y-axis | active strict saddle |
//! | Z2 | `|x| + y^2` | y-axis | local min |
//! | Z3 | `-y` on `{z >= max(0, y - x^2)}` | x-axis | non-regular |
//! | Z4 | curve `(t, t^1.5)` | `{0}` | non-regular |
//! | Z5 | Cartan umbrella `z(x^2+y^2) = x^3` | z-axis | non-regular |
//! | Z6 | `|Ax|_1 - c|x|^2 + b x0 x2` | x2-axis | active strict saddle |
//! | Z7 | `x'Qx/2 + <l,x> + c0 + lambda |x|_1` | `{x0 = 0}` | active strict saddle |

use super::epi_max::{in_epi_max, project_epi_max};
use super::{
    random_unit, Classification, CoordinateManifold, Objective, Point, ProblemError,
    ProblemInstance, SetGeometry,
};
use crate::linalg::{self, sign0, SquareMatrix};
use rand::{Rng, RngCore};
use std::sync::Arc;

pub const ZOO_LABELS: [&str; 7] = ["Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "Z7"];

const RADIUS: f64 = 0.5;
const SET_TOL: f64 = 1e-9;

/// Every `+-1` completion of `signs` at its zero entries.
fn sign_patterns(signs: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(signs.len())];
    for &s in signs {
        let choices: &[f64] = if s == 0.0 { &[-1.0, 1.0] } else { &[s] };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

/// `f(x, y) = |x| + kappa y^2`.
#[derive(Debug, Clone, Copy)]
pub struct AbsQuadratic {
    pub kappa: f64,
}

impl Objective for AbsQuadratic {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        x[0].abs() + self.kappa * x[1] * x[1]
    }

    fn subgrad(&self, x: &[f64]) -> Point {
        vec![sign0(x[0]), 2.0 * self.kappa * x[1]]
    }

    fn subgrad_generators(&self, x: &[f64]) -> Vec<Point> {
        let dy = 2.0 * self.kappa * x[1];
        if x[0] == 0.0 {
            vec![vec![-1.0, dy], vec![1.0, dy]]
        } else {
            vec![vec![sign0(x[0]), dy]]
        }
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some((1.0 + self.kappa * self.kappa).sqrt())
    }
}

impl AbsQuadratic {
    pub fn instance(self, label: &str, classification: Classification) -> ProblemInstance {
        let k = self.kappa;
        let manifold = CoordinateManifold::new(
            vec![0.0, 0.0],
            vec![1],
            RADIUS,
            move |y| vec![0.0, 2.0 * k * y[1]],
            move |_| SquareMatrix::diag(&[0.0, 2.0 * k]),
        );
        ProblemInstance {
            label: label.to_string(),
            objective: Arc::new(self),
            manifold: Some(Arc::new(manifold)),
            classification,
        }
    }
}

/// `-y` restricted to `X = {(x, y, z) : z >= max(0, y - x^2)}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpiMaxSet;

impl Objective for EpiMaxSet {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.in_domain(x) {
            -x[1]
        } else {
            f64::INFINITY
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        in_epi_max(x, 1e-12)
    }

    fn subgrad(&self, _x: &[f64]) -> Point {
        vec![0.0, -1.0, 0.0]
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn project_constraint(&self, x: &[f64]) -> Option<Point> {
        Some(project_epi_max(x))
    }

    fn set_geometry(&self) -> Option<&dyn SetGeometry> {
        Some(self)
    }
}

impl SetGeometry for EpiMaxSet {
    fn unit_normals(&self, x: &[f64]) -> Vec<Point> {
        let mut out = Vec::new();
        let tol = 1e-10;
        if x[2].abs() <= tol && x[1] - x[0] * x[0] <= tol {
            out.push(vec![0.0, 0.0, -1.0]);
        }
        let face = x[2] - (x[1] - x[0] * x[0]);
        if face.abs() <= tol && x[2] >= -tol {
            out.extend(linalg::normalized(&[-2.0 * x[0], 1.0, -1.0]));
        }
        out
    }

    fn sample_near(&self, rng: &mut dyn RngCore, radius: f64) -> Point {
        let a = if rng.random::<bool>() { radius } else { -radius };
        let u: f64 = rng.random();
        match rng.random_range(0..3) {
            0 => vec![a, a * a - u * radius, 0.0],
            1 => vec![a, a * a, 0.0],
            _ => vec![a, a * a + u * radius, u * radius],
        }
    }
}

/// The curve `{(t, t^1.5) : t >= 0}` as a set.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerCurve;

impl PowerCurve {
    fn on_curve(x: &[f64]) -> bool {
        x[0] >= -SET_TOL && (x[1] - x[0].max(0.0).powf(1.5)).abs() <= SET_TOL
    }
}

impl Objective for PowerCurve {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        if Self::on_curve(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        Self::on_curve(x)
    }

    fn subgrad(&self, _x: &[f64]) -> Point {
        vec![0.0, 0.0]
    }

    fn set_geometry(&self) -> Option<&dyn SetGeometry> {
        Some(self)
    }
}

impl SetGeometry for PowerCurve {
    fn unit_normals(&self, x: &[f64]) -> Vec<Point> {
        let t = x[0].max(0.0);
        if t == 0.0 {
            return vec![];
        }
        let n = linalg::normalized(&[-1.5 * t.sqrt(), 1.0]).expect("nonzero normal");
        vec![linalg::scale(&n, -1.0), n]
    }

    fn sample_near(&self, rng: &mut dyn RngCore, radius: f64) -> Point {
        let t = radius * (0.5 + 0.5 * rng.random::<f64>());
        vec![t, t.powf(1.5)]
    }
}

/// The Cartan umbrella `{z (x^2 + y^2) = x^3}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CartanUmbrella;

impl CartanUmbrella {
    fn defining(x: &[f64]) -> f64 {
        x[2] * (x[0] * x[0] + x[1] * x[1]) - x[0].powi(3)
    }

    fn gradient(x: &[f64]) -> Point {
        vec![
            2.0 * x[0] * x[2] - 3.0 * x[0] * x[0],
            2.0 * x[1] * x[2],
            x[0] * x[0] + x[1] * x[1],
        ]
    }
}

impl Objective for CartanUmbrella {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.in_domain(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        let scale = linalg::norm(x).max(1.0).powi(3);
        Self::defining(x).abs() <= SET_TOL * scale
    }

    fn subgrad(&self, _x: &[f64]) -> Point {
        vec![0.0; 3]
    }

    fn set_geometry(&self) -> Option<&dyn SetGeometry> {
        Some(self)
    }
}

impl SetGeometry for CartanUmbrella {
    fn unit_normals(&self, x: &[f64]) -> Vec<Point> {
        match linalg::normalized(&Self::gradient(x)) {
            Some(n) => vec![linalg::scale(&n, -1.0), n],
            None => vec![],
        }
    }

    fn sample_near(&self, rng: &mut dyn RngCore, radius: f64) -> Point {
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let (s, c) = theta.sin_cos();
        vec![radius * c, radius * s, radius * c.powi(3)]
    }
}

/// `f(x) = |Ax|_1 - c |x|^2 + b x0 x2` on `R^3` with `A = [[1, 0.5, 0], [0, 1, 0]]`.
///
/// The kernel of `A` is the x2-axis, which is the active manifold through the
/// strict saddle at the origin. The bilinear coupling makes the manifold
/// dynamics feel the normal coordinate.
#[derive(Debug, Clone, Copy)]
pub struct WeaklyConvexL1 {
    pub c: f64,
    pub b: f64,
}

impl WeaklyConvexL1 {
    const A: [[f64; 3]; 2] = [[1.0, 0.5, 0.0], [0.0, 1.0, 0.0]];

    fn ax(x: &[f64]) -> [f64; 2] {
        [linalg::dot(&Self::A[0], x), linalg::dot(&Self::A[1], x)]
    }

    fn smooth_grad(&self, x: &[f64]) -> Point {
        vec![
            -2.0 * self.c * x[0] + self.b * x[2],
            -2.0 * self.c * x[1],
            -2.0 * self.c * x[2] + self.b * x[0],
        ]
    }

    fn with_signs(&self, x: &[f64], s: &[f64]) -> Point {
        let mut g = self.smooth_grad(x);
        for (row, si) in Self::A.iter().zip(s) {
            for j in 0..3 {
                g[j] += si * row[j];
            }
        }
        g
    }

    pub fn instance(self, label: &str) -> ProblemInstance {
        let (c, b) = (self.c, self.b);
        let manifold = CoordinateManifold::new(
            vec![0.0; 3],
            vec![2],
            RADIUS,
            move |y| vec![b * y[2], 0.0, -2.0 * c * y[2]],
            move |_| {
                SquareMatrix::from_rows(&[
                    vec![-2.0 * c, 0.0, b],
                    vec![0.0, -2.0 * c, 0.0],
                    vec![b, 0.0, -2.0 * c],
                ])
                .expect("3x3")
            },
        );
        ProblemInstance {
            label: label.to_string(),
            objective: Arc::new(self),
            manifold: Some(Arc::new(manifold)),
            classification: Classification::ActiveStrictSaddle,
        }
    }
}

impl Objective for WeaklyConvexL1 {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ax = Self::ax(x);
        ax[0].abs() + ax[1].abs() - self.c * linalg::dot(x, x) + self.b * x[0] * x[2]
    }

    fn subgrad(&self, x: &[f64]) -> Point {
        let ax = Self::ax(x);
        self.with_signs(x, &[sign0(ax[0]), sign0(ax[1])])
    }

    fn subgrad_generators(&self, x: &[f64]) -> Vec<Point> {
        let ax = Self::ax(x);
        sign_patterns(&[sign0(ax[0]), sign0(ax[1])])
            .iter()
            .map(|s| self.with_signs(x, s))
            .collect()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        // max |A^T s| over sign vectors plus the smooth part on the radius-0.5 ball
        Some(3.25f64.sqrt() + RADIUS * (2.0 * self.c + self.b))
    }
}

/// `g(x) + h(x)` with `g = x'Qx/2 + <lin, x> + c0` and `h = lambda |x|_1`.
#[derive(Debug, Clone)]
pub struct QuadraticL1 {
    pub q: SquareMatrix,
    pub lin: Point,
    pub c0: f64,
    pub lambda: f64,
}

impl QuadraticL1 {
    pub fn grad_g(&self, x: &[f64]) -> Point {
        linalg::add(&self.q.apply(x), &self.lin)
    }

    fn g(&self, x: &[f64]) -> f64 {
        0.5 * self.q.quad_form(x) + linalg::dot(&self.lin, x) + self.c0
    }

    /// The instance used as Z7: `Q = [[1, b], [b, -1]]`, `lin = (-2b, 1)`,
    /// `c0 = -1/2`, `lambda = 1`, strict saddle at `(0, 2)`.
    pub fn z7(b: f64) -> Self {
        Self {
            q: SquareMatrix::from_rows(&[vec![1.0, b], vec![b, -1.0]]).expect("2x2"),
            lin: vec![-2.0 * b, 1.0],
            c0: -0.5,
            lambda: 1.0,
        }
    }

    /// `lambda |x|` in one dimension (`g = 0`).
    pub fn l1_only(lambda: f64, dim: usize) -> Self {
        Self {
            q: SquareMatrix::zeros(dim),
            lin: vec![0.0; dim],
            c0: 0.0,
            lambda,
        }
    }

    fn z7_instance(self, label: &str) -> ProblemInstance {
        let lambda = self.lambda;
        let b = self.q[(0, 1)];
        let manifold = CoordinateManifold::new(
            vec![0.0, 2.0],
            vec![1],
            RADIUS,
            move |y| vec![b * y[1] - 2.0 * b, -y[1] + 1.0 + lambda * sign0(y[1])],
            move |_| SquareMatrix::from_rows(&[vec![1.0, b], vec![b, -1.0]]).expect("2x2"),
        );
        ProblemInstance {
            label: label.to_string(),
            objective: Arc::new(self),
            manifold: Some(Arc::new(manifold)),
            classification: Classification::ActiveStrictSaddle,
        }
    }

    fn with_signs(&self, x: &[f64], s: &[f64]) -> Point {
        linalg::axpy(&self.grad_g(x), self.lambda, s)
    }
}

impl Objective for QuadraticL1 {
    fn dim(&self) -> usize {
        self.lin.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.g(x) + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn subgrad(&self, x: &[f64]) -> Point {
        let s: Point = x.iter().map(|&v| sign0(v)).collect();
        self.with_signs(x, &s)
    }

    fn subgrad_generators(&self, x: &[f64]) -> Vec<Point> {
        if self.lambda == 0.0 {
            return vec![self.grad_g(x)];
        }
        let s: Point = x.iter().map(|&v| sign0(v)).collect();
        sign_patterns(&s)
            .iter()
            .map(|p| self.with_signs(x, p))
            .collect()
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        // |Q| * (|anchor| + radius) + |lin| + lambda sqrt(d), with |anchor| <= 2
        let d = self.dim() as f64;
        Some(self.q.frobenius() * (2.0 + RADIUS) + linalg::norm(&self.lin) + self.lambda * d.sqrt())
    }

    fn smooth_subgrad(&self, x: &[f64]) -> Point {
        self.grad_g(x)
    }

    fn prox(&self, x: &[f64], alpha: f64) -> Option<Point> {
        let t = alpha * self.lambda;
        Some(
            x.iter()
                .map(|&v| v.signum() * (v.abs() - t).max(0.0))
                .collect(),
        )
    }
}

fn set_instance(
    label: &str,
    objective: Arc<dyn Objective>,
    anchor: Point,
    free: Vec<usize>,
) -> ProblemInstance {
    ProblemInstance {
        label: label.to_string(),
        objective,
        manifold: Some(Arc::new(CoordinateManifold::flat(anchor, free, RADIUS))),
        classification: Classification::NonRegularExample,
    }
}

pub fn problem_by_label(label: &str) -> Result<ProblemInstance, ProblemError> {
    let p = match label {
        "Z1" => AbsQuadratic { kappa: -1.0 }.instance("Z1", Classification::ActiveStrictSaddle),
        "Z2" => AbsQuadratic { kappa: 1.0 }.instance("Z2", Classification::LocalMin),
        "Z3" => set_instance("Z3", Arc::new(EpiMaxSet), vec![0.0; 3], vec![0]),
        "Z4" => set_instance("Z4", Arc::new(PowerCurve), vec![0.0; 2], vec![]),
        "Z5" => set_instance("Z5", Arc::new(CartanUmbrella), vec![0.0; 3], vec![2]),
        "Z6" => WeaklyConvexL1 { c: 0.5, b: 0.5 }.instance("Z6"),
        "Z7" => QuadraticL1::z7(0.5).z7_instance("Z7"),
        "abs" => AbsQuadratic { kappa: 0.0 }.instance("abs", Classification::LocalMin),
        other => return Err(ProblemError::UnknownLabel(other.to_string())),
    };
    Ok(p)
}

pub fn make_zoo() -> Vec<ProblemInstance> {
    ZOO_LABELS
        .iter()
        .map(|l| problem_by_label(l).expect("zoo label"))
        .collect()
}

/// Uniform sample in the ball of radius `r` around `center`.
pub fn uniform_in_ball(rng: &mut dyn RngCore, center: &[f64], r: f64) -> Point {
    let d = center.len();
    let u = random_unit(rng, d);
    let rho = r * rng.random::<f64>().powf(1.0 / d as f64);
    linalg::axpy(center, rho, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ON_SET_TOL;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn z1_worked_values() {
        let z1 = problem_by_label("Z1").unwrap();
        let x = [0.5, 0.3];
        assert!((z1.objective.value(&x) - 0.41).abs() < 1e-15);
        assert!(approx(&z1.objective.subgrad(&x), &[1.0, -0.6], 1e-15));
        let m = z1.manifold().unwrap();
        assert_eq!(m.project(&x), vec![0.0, 0.3]);
        assert!((m.distance(&x) - 0.5).abs() < 1e-15);
        assert_eq!(z1.anchor_curvatures().unwrap(), vec![-2.0]);
        assert_eq!(z1.classification, Classification::ActiveStrictSaddle);
    }

    #[test]
    fn kink_selection_is_zero() {
        let z1 = problem_by_label("Z1").unwrap();
        assert_eq!(z1.objective.subgrad(&[0.0, 1.0]), vec![0.0, -2.0]);
        assert_eq!(z1.objective.subgrad_generators(&[0.0, 1.0]).len(), 2);
    }

    #[test]
    fn zoo_has_all_labels_and_consistent_classifications() {
        let zoo = make_zoo();
        assert_eq!(zoo.len(), 7);
        for p in &zoo {
            p.check_classification().unwrap();
        }
        assert!(matches!(
            problem_by_label("Z9"),
            Err(ProblemError::UnknownLabel(_))
        ));
    }

    #[test]
    fn z6_and_z7_are_saddles() {
        let z6 = problem_by_label("Z6").unwrap();
        assert_eq!(z6.anchor_curvatures().unwrap(), vec![-1.0]);
        let z7 = problem_by_label("Z7").unwrap();
        assert_eq!(z7.anchor_curvatures().unwrap(), vec![-1.0]);
        // The anchor is critical: 0 lies in the convex hull of the generators.
        let gens = z7.objective.subgrad_generators(&[0.0, 2.0]);
        assert_eq!(gens.len(), 2);
        assert!(approx(&linalg::add(&gens[0], &gens[1]), &[0.0, 0.0], 1e-15));
        assert!(approx(&z7.manifold().unwrap().cov_grad(&[0.0, 2.0]), &[0.0, 0.0], 1e-15));
    }

    #[test]
    fn z3_normals_match_hand_computation() {
        let k = 4.0;
        let x = [1.0 / k, 1.0 / (k * k), 0.0];
        let normals = EpiMaxSet.unit_normals(&x);
        assert_eq!(normals.len(), 2);
        let want = linalg::normalized(&[-2.0 / k, 1.0, -1.0]).unwrap();
        assert!(approx(&normals[1], &want, 1e-15));
    }

    #[test]
    fn z4_normal_is_orthogonal_to_tangent() {
        let t: f64 = 0.09;
        let n = &PowerCurve.unit_normals(&[t, t.powf(1.5)])[1];
        let tangent = [1.0, 1.5 * t.sqrt()];
        assert!(linalg::dot(n, &tangent).abs() < 1e-15);
    }

    #[test]
    fn z5_normal_along_diagonal_ray() {
        let t = 0.2;
        let normals = CartanUmbrella.unit_normals(&[t, 0.0, t]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx(&normals[1], &[-r, 0.0, r], 1e-15));
    }

    #[test]
    fn set_samplers_land_in_their_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for label in ["Z3", "Z4", "Z5"] {
            let p = problem_by_label(label).unwrap();
            for _ in 0..500 {
                let x = p.sample_shell(&mut rng, 0.1);
                assert!(p.objective.in_domain(&x), "{label}: {x:?}");
                assert!(!p.objective.set_geometry().unwrap().unit_normals(&x).is_empty() || label == "Z3");
            }
        }
    }

    #[test]
    fn soft_threshold_prox() {
        let h = QuadraticL1::l1_only(1.0, 1);
        let p = h.prox(&[0.5], 0.2).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        assert_eq!(h.prox(&[-0.1], 0.2).unwrap(), vec![0.0]);
    }

    #[test]
    fn prox_minimizes_subproblem_on_grid() {
        let z = QuadraticL1::z7(0.5);
        let x = [0.07, -0.3];
        let alpha = 0.3;
        let p = z.prox(&x, alpha).unwrap();
        let obj = |y: &[f64]| {
            z.lambda * (y[0].abs() + y[1].abs()) + linalg::dist(y, &x).powi(2) / (2.0 * alpha)
        };
        let best = obj(&p);
        for i in -200..=200 {
            for j in -200..=200 {
                let y = [x[0] + i as f64 * 2e-3, x[1] + j as f64 * 2e-3];
                assert!(obj(&y) >= best - 1e-10);
            }
        }
    }

    fn zoo_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
        (0usize..7, prop::collection::vec(-1.0f64..1.0, 3))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn manifold_projection_invariants((i, raw) in zoo_strategy()) {
            let p = &make_zoo()[i];
            let m = p.manifold().unwrap();
            let d = p.dim();
            let x = linalg::axpy(m.anchor(), 0.5 * m.validity_radius(), &raw[..d]);
            let y = m.project(&x);
            prop_assert!(linalg::dist(&m.project(&y), &y) <= 1e-10);
            prop_assert!((m.distance(&x) - linalg::dist(&x, &y)).abs() <= 1e-10);
            prop_assert!(m.distance(&y) <= ON_SET_TOL);
            let g = m.cov_grad(&y);
            prop_assert!(approx(&m.tangent_project(&y, &g), &g, 1e-12));
        }

        #[test]
        fn tangent_projector_is_an_orthogonal_projector(
            (i, raw) in zoo_strategy(),
            u in prop::collection::vec(-1.0f64..1.0, 3),
            w in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = &make_zoo()[i];
            let m = p.manifold().unwrap();
            let d = p.dim();
            let y = m.project(&linalg::axpy(m.anchor(), 0.2, &raw[..d]));
            let (u, w) = (&u[..d], &w[..d]);
            let pu = m.tangent_project(&y, u);
            prop_assert!(approx(&m.tangent_project(&y, &pu), &pu, 1e-10));
            let lhs = linalg::dot(&pu, w);
            let rhs = linalg::dot(u, &m.tangent_project(&y, w));
            prop_assert!((lhs - rhs).abs() <= 1e-12);
            prop_assert!(linalg::norm(&pu) <= linalg::norm(u) + 1e-12);
        }

        #[test]
        fn abs_part_satisfies_subgradient_inequality(
            x in prop::collection::vec(-1.0f64..1.0, 2),
            y in prop::collection::vec(-1.0f64..1.0, 2),
            kink in any::<bool>(),
        ) {
            let f = AbsQuadratic { kappa: 0.0 };
            let x = if kink { vec![0.0, x[1]] } else { x };
            for v in f.subgrad_generators(&x) {
                let lower = f.value(&x) + linalg::dot(&v, &linalg::sub(&y, &x));
                prop_assert!(f.value(&y) >= lower - 1e-15);
            }
        }

        #[test]
        fn subgradients_respect_lipschitz_bounds((i, raw) in zoo_strategy()) {
            let p = &make_zoo()[i];
            let Some(bound) = p.objective.lipschitz_bound() else { return Ok(()); };
            let d = p.dim();
            let anchor = p.anchor().unwrap().to_vec();
            let scaled: Vec<f64> = raw[..d].iter().map(|v| v * RADIUS / (d as f64).sqrt()).collect();
            let x = linalg::add(&anchor, &scaled);
            if !p.objective.in_domain(&x) { return Ok(()); }
            for v in p.objective.subgrad_generators(&x) {
                prop_assert!(linalg::norm(&v) <= bound + 1e-12, "{}: {v:?} > {bound}", p.label);
            }
        }
    }
}
