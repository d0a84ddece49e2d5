//! Spectral lifts of permutation-symmetric sets to symmetric matrices.
//!
//! For a symmetric set `S` in `R^n` with projection `P_S`, the lifted set
//! `{X : lambda(X) in S}` has projection `U Diag(P_S(lambda(X))) U^T` where
//! `X = U Diag(lambda(X)) U^T` with eigenvalues in descending order.

use super::ProblemError;
use crate::eigen::sym_eigen;
use crate::linalg::{dist, SquareMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProjection {
    pub matrix: SquareMatrix,
    /// `|lambda(X) - P_S(lambda(X))|`, which equals the Frobenius distance.
    pub distance: f64,
}

pub struct SpectralLift<F> {
    n: usize,
    sym_project: F,
}

/// Builds the lifted projection for `n` in `{2, 3}`.
pub fn spectral_lift<F>(sym_project: F, n: usize) -> Result<SpectralLift<F>, ProblemError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if n != 2 && n != 3 {
        return Err(ProblemError::DimensionMismatch {
            expected: if n < 2 { 2 } else { 3 },
            got: n,
        });
    }
    Ok(SpectralLift { n, sym_project })
}

impl<F> SpectralLift<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn project(&self, x: &SquareMatrix) -> Result<SpectralProjection, ProblemError> {
        if x.n() != self.n {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n,
                got: x.n(),
            });
        }
        let eig = sym_eigen(x)?;
        let target = (self.sym_project)(&eig.values);
        Ok(SpectralProjection {
            matrix: SquareMatrix::reconstruct(&eig.vectors, &target),
            distance: dist(&eig.values, &target),
        })
    }
}

/// Projection onto the nonnegative orthant.
pub fn orthant(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::MatrixError;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64) -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap()
    }

    #[test]
    fn diagonal_input_reduces_to_vector_projection() {
        let lift = spectral_lift(orthant, 2).unwrap();
        let p = lift.project(&SquareMatrix::diag(&[2.0, -0.5])).unwrap();
        assert!(p.matrix.sub(&SquareMatrix::diag(&[2.0, 0.0])).frobenius() < 1e-15);
        assert!((p.distance - 0.5).abs() < 1e-15);
    }

    #[test]
    fn swap_matrix_projects_to_half_ones() {
        let lift = spectral_lift(orthant, 2).unwrap();
        let p = lift.project(&m2(0.0, 1.0, 0.0)).unwrap();
        assert!(p.matrix.sub(&m2(0.5, 0.5, 0.5)).frobenius() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(spectral_lift(orthant, 4).is_err());
        let lift = spectral_lift(orthant, 2).unwrap();
        let a = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            lift.project(&a),
            Err(ProblemError::Matrix(MatrixError::NotSymmetric(_)))
        ));
    }

    /// Nearest PSD matrix by grid search over `[[a, b], [b, c]]` with
    /// `a, c >= 0` and `b^2 <= a c`.
    fn brute_force_psd_distance(x: &SquareMatrix) -> f64 {
        let n = 120;
        let span = 3.0;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let a = span * i as f64 / n as f64;
            for k in 0..=n {
                let c = span * k as f64 / n as f64;
                let bmax = (a * c).sqrt();
                let b = x[(0, 1)].clamp(-bmax, bmax);
                best = best.min(m2(a, b, c).sub(x).frobenius());
            }
        }
        best
    }

    proptest! {
        #[test]
        fn lifted_distance_matches_frobenius(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let lift = spectral_lift(orthant, 2).unwrap();
            let x = m2(a, b, c);
            let p = lift.project(&x).unwrap();
            prop_assert!((p.matrix.sub(&x).frobenius() - p.distance).abs() <= 1e-8);
        }

        #[test]
        fn lift_is_idempotent(v in prop::array::uniform6(-2.0f64..2.0)) {
            let x = SquareMatrix::from_rows(&[
                vec![v[0], v[1], v[2]],
                vec![v[1], v[3], v[4]],
                vec![v[2], v[4], v[5]],
            ]).unwrap();
            let lift = spectral_lift(orthant, 3).unwrap();
            let once = lift.project(&x).unwrap().matrix;
            let twice = lift.project(&once).unwrap();
            prop_assert!(twice.matrix.sub(&once).frobenius() <= 1e-9);
            prop_assert!(twice.distance <= 1e-9);
        }
    }

    #[test]
    fn lift_matches_grid_projection() {
        let lift = spectral_lift(orthant, 2).unwrap();
        for (a, b, c) in [(0.3, 0.8, -0.4), (-0.5, 0.2, -1.0), (1.0, -1.2, 0.1), (0.0, 1.0, 0.0)] {
            let x = m2(a, b, c);
            let p = lift.project(&x).unwrap();
            let grid = brute_force_psd_distance(&x);
            assert!(p.distance <= grid + 1e-12, "{a} {b} {c}: {} vs {grid}", p.distance);
            assert!(grid - p.distance <= 3e-2, "{a} {b} {c}: {} vs {grid}", p.distance);
        }
    }
}
