//! Symmetric eigen-decomposition for small matrices.
//!
//! 2x2 matrices use the closed form; anything larger goes through cyclic
//! Jacobi rotations. Eigenvalues come back sorted in descending order, ties
//! broken by the lexicographic order of the sign-normalised eigenvectors, so
//! the ordered eigenvalue map is a deterministic function of the input.

use crate::linalg::{MatrixError, SquareMatrix};
use std::cmp::Ordering;

pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and the orthogonal matrix of column eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: SquareMatrix,
}

impl SymEigen {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

pub fn sym_eigen(a: &SquareMatrix) -> Result<SymEigen, MatrixError> {
    let scale = a.frobenius().max(1.0);
    let asym = a.max_asymmetry();
    if asym > 1e-10 * scale || !a.rows().iter().flatten().all(|v| v.is_finite()) {
        return Err(MatrixError::NotSymmetric(asym));
    }
    let (values, vectors) = match a.n() {
        0 => (vec![], SquareMatrix::zeros(0)),
        1 => (vec![a[(0, 0)]], SquareMatrix::identity(1)),
        2 => closed_form_2x2(a),
        _ => jacobi(a)?,
    };
    Ok(sort_descending(values, vectors))
}

fn closed_form_2x2(a: &SquareMatrix) -> (Vec<f64>, SquareMatrix) {
    let (p, b, c) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
    let mean = 0.5 * (p + c);
    let radius = (0.5 * (p - c)).hypot(b);
    let theta = 0.5 * (2.0 * b).atan2(p - c);
    let (s, co) = theta.sin_cos();
    let vectors = SquareMatrix::from_columns(&[vec![co, s], vec![-s, co]]);
    (vec![mean + radius, mean - radius], vectors)
}

fn jacobi(a0: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix), MatrixError> {
    let n = a0.n();
    let mut a = a0.clone();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = SquareMatrix::identity(n);
    let scale = a.frobenius();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(MatrixError::NoConvergence(MAX_SWEEPS))
}

fn sign_normalize(mut u: Vec<f64>) -> Vec<f64> {
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    u
}

fn sort_descending(values: Vec<f64>, vectors: SquareMatrix) -> SymEigen {
    let n = values.len();
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|i| (values[i], sign_normalize(vectors.column(i))))
        .collect();
    pairs.sort_by(|(la, ua), (lb, ub)| {
        if (la - lb).abs() <= 1e-12 * scale {
            ua.partial_cmp(ub).unwrap_or(Ordering::Equal)
        } else {
            lb.partial_cmp(la).unwrap_or(Ordering::Equal)
        }
    });
    let values = pairs.iter().map(|(l, _)| *l).collect();
    let cols: Vec<Vec<f64>> = pairs.into_iter().map(|(_, u)| u).collect();
    SymEigen {
        values,
        vectors: SquareMatrix::from_columns(&cols),
    }
}
