//! Escape certificate for the linearized flow `F(v) = -H (v - p)` near a
//! saddle: `eta(v) = |A (v - p)|` with `A` the orthogonal coordinates of the
//! unstable eigenspace of `-H`.

use super::DiagnosticsError;
use crate::eigen::sym_eigen;
use crate::linalg::{self, SquareMatrix};
use crate::problems::Point;
use serde::{Deserialize, Serialize};

const STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const GRID_RADIUS: f64 = 0.1;
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LyapunovEta {
    rows: Vec<Point>,
    p: Point,
    h: SquareMatrix,
}

impl LyapunovEta {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let w = linalg::sub(v, &self.p);
        self.rows.iter().map(|a| linalg::dot(a, &w).powi(2)).sum::<f64>().sqrt()
    }

    /// `F(v) = -H (v - p)`
    pub fn field(&self, v: &[f64]) -> Point {
        linalg::scale(&self.h.apply(&linalg::sub(v, &self.p)), -1.0)
    }

    pub fn unstable_dim(&self) -> usize {
        self.rows.len()
    }

    /// `(1 + c eps) eta(v) - eta(v + eps F(v))`, the growth shortfall at one step.
    fn shortfall(&self, v: &[f64], eps: f64, c: f64) -> f64 {
        let moved = linalg::axpy(v, eps, &self.field(v));
        (1.0 + c * eps) * self.eval(v) - self.eval(&moved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    pub c: f64,
    pub c_prime: f64,
    pub unstable_dim: usize,
    /// Points of the validation grid times step sizes.
    pub checked: usize,
    /// Validation cases with `eta(v + eps F) < (1 + c eps) eta(v) - c' eps^2`.
    pub violations: usize,
}

/// Cube grid in `B_radius(p)` with `n` points per axis, shifted by `offset`
/// grid cells.
fn ball_grid(p: &[f64], radius: f64, n: usize, offset: f64) -> Vec<Point> {
    let d = p.len();
    let h = 2.0 * radius / (n - 1) as f64;
    let total = n.pow(d as u32);
    (0..total)
        .filter_map(|mut idx| {
            let mut v = vec![0.0; d];
            for vi in v.iter_mut() {
                *vi = -radius + h * ((idx % n) as f64 + offset);
                idx /= n;
            }
            (linalg::norm(&v) <= radius).then(|| linalg::add(p, &v))
        })
        .collect()
}

/// Builds `eta` and certifies `(c, c')` on grids in `B_0.1(p)`: `c` is the
/// slowest unstable rate, `c'` the worst shortfall on one grid, and the
/// inequality is then re-checked on an offset grid.
pub fn lyapunov_eta(h: &SquareMatrix, p: &[f64]) -> Result<(LyapunovEta, LyapunovCertificate), DiagnosticsError> {
    let eig = sym_eigen(h)?;
    let scale = eig.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let unstable: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] < -1e-12 * scale)
        .collect();
    if unstable.is_empty() {
        return Err(DiagnosticsError::NoUnstableSubspace);
    }
    let c = unstable
        .iter()
        .map(|&i| -eig.values[i])
        .fold(f64::INFINITY, f64::min);
    let eta = LyapunovEta {
        rows: unstable.iter().map(|&i| eig.eigenvector(i)).collect(),
        p: p.to_vec(),
        h: h.clone(),
    };
    let n = if p.len() <= 2 { 41 } else { 15 };
    let tol = |v: &[f64]| ROUNDOFF * (1.0 + eta.eval(v));
    let mut c_prime: f64 = 0.0;
    for v in ball_grid(p, GRID_RADIUS, n, 0.0) {
        for eps in STEPS {
            let gap = eta.shortfall(&v, eps, c) - tol(&v);
            c_prime = c_prime.max(gap / (eps * eps));
        }
    }
    let validation = ball_grid(p, GRID_RADIUS, n, 0.37);
    let mut violations = 0;
    for v in &validation {
        for eps in STEPS {
            if eta.shortfall(v, eps, c) > c_prime * eps * eps + tol(v) {
                violations += 1;
            }
        }
    }
    let cert = LyapunovCertificate {
        c,
        c_prime,
        unstable_dim: eta.unstable_dim(),
        checked: validation.len() * STEPS.len(),
        violations,
    };
    Ok((eta, cert))
}
