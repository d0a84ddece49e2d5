use super::{Manifold, Point};
use crate::linalg::SquareMatrix;
use std::sync::Arc;

type GradFn = Arc<dyn Fn(&[f64]) -> Point + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> SquareMatrix + Send + Sync>;

/// Affine coordinate subspace `{x : x_i = anchor_i for i not in free}`.
///
/// `grad` and `hess` give the gradient and Hessian of a smooth extension of
/// `f` near the manifold; the oracle projects them onto the tangent space.
#[derive(Clone)]
pub struct CoordinateManifold {
    anchor: Point,
    free: Vec<usize>,
    radius: f64,
    grad: GradFn,
    hess: HessFn,
}

impl CoordinateManifold {
    pub fn new(
        anchor: Point,
        free: Vec<usize>,
        radius: f64,
        grad: impl Fn(&[f64]) -> Point + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> SquareMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            anchor,
            free,
            radius,
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    /// Manifold carrying no objective data (zero covariant derivatives).
    pub fn flat(anchor: Point, free: Vec<usize>, radius: f64) -> Self {
        let d = anchor.len();
        Self::new(
            anchor,
            free,
            radius,
            move |_| vec![0.0; d],
            move |_| SquareMatrix::zeros(d),
        )
    }

    pub fn free_coordinates(&self) -> &[usize] {
        &self.free
    }

    fn mask(&self, w: &[f64]) -> Point {
        let mut out = vec![0.0; w.len()];
        for &i in &self.free {
            out[i] = w[i];
        }
        out
    }
}

impl Manifold for CoordinateManifold {
    fn ambient_dim(&self) -> usize {
        self.anchor.len()
    }

    fn project(&self, x: &[f64]) -> Point {
        let mut y = self.anchor.clone();
        for &i in &self.free {
            y[i] = x[i];
        }
        y
    }

    fn tangent_project(&self, _base: &[f64], w: &[f64]) -> Point {
        self.mask(w)
    }

    fn cov_grad(&self, y: &[f64]) -> Point {
        self.mask(&(self.grad)(y))
    }

    fn cov_hess(&self, y: &[f64]) -> SquareMatrix {
        let h = (self.hess)(y);
        let d = self.ambient_dim();
        let mut out = SquareMatrix::zeros(d);
        for &i in &self.free {
            for &j in &self.free {
                out[(i, j)] = h[(i, j)];
            }
        }
        out
    }

    fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    fn validity_radius(&self) -> f64 {
        self.radius
    }

    fn tangent_basis(&self, _y: &[f64]) -> Vec<Point> {
        self.free
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; self.ambient_dim()];
                e[i] = 1.0;
                e
            })
            .collect()
    }
}
