//! Nearest-point projection onto `X = {(x, y, z) : z >= max(0, y - x^2)}`.
//!
//! `X` is not convex, so the projection compares three candidate families:
//! the flat face `z = 0`, the curved face `z = y - x^2` and the kink curve
//! `(x, x^2, 0)` where both meet. The stationarity conditions on the curved
//! face and on the kink are depressed cubics in `x`.

use super::Point;
use crate::linalg::dist;

/// Real roots of `x^3 + a x + b = 0`, Newton-polished.
pub fn real_roots_depressed_cubic(a: f64, b: f64) -> Vec<f64> {
    let disc = (b / 2.0).powi(2) + (a / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-b / 2.0 + s).cbrt() + (-b / 2.0 - s).cbrt()]
    } else if a == 0.0 {
        vec![0.0]
    } else {
        let m = 2.0 * (-a / 3.0).sqrt();
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect()
    };
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let f = *r * *r * *r + a * *r + b;
            let df = 3.0 * *r * *r + a;
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            *r -= step;
            if step.abs() <= 1e-16 * r.abs().max(1.0) {
                break;
            }
        }
    }
    roots
}

pub(crate) fn in_epi_max(x: &[f64], tol: f64) -> bool {
    x[2] >= -tol && x[2] >= x[1] - x[0] * x[0] - tol
}

/// Nearest point of `X` to `q`.
pub fn project_epi_max(q: &[f64]) -> Point {
    if in_epi_max(q, 0.0) {
        return q.to_vec();
    }
    let (p, s, r) = (q[0], q[1], q[2]);
    let mut candidates: Vec<Point> = Vec::with_capacity(7);
    if s <= p * p {
        candidates.push(vec![p, s, 0.0]);
    }
    for x in real_roots_depressed_cubic(1.0 - s + r, -p) {
        let z = (s - x * x + r) / 2.0;
        if z >= 0.0 {
            candidates.push(vec![x, x * x + z, z]);
        }
    }
    for x in real_roots_depressed_cubic(0.5 - s, -0.5 * p) {
        candidates.push(vec![x, x * x, 0.0]);
    }
    candidates
        .into_iter()
        .min_by(|a, b| dist(a, q).total_cmp(&dist(b, q)))
        .expect("kink family always yields a candidate")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(q: &[f64]) -> f64 {
        // Parametrize the boundary as (x, y) -> (x, y, max(0, y - x^2)) on a grid,
        // then refine locally.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let x = q[0] - 1.0 + 2.0 * i as f64 / n as f64;
                let y = q[1] - 1.0 + 2.0 * j as f64 / n as f64;
                let pt = [x, y, (y - x * x).max(0.0)];
                let d = dist(&pt, q);
                if d < best.0 {
                    best = (d, x, y);
                }
            }
        }
        let (mut d, mut bx, mut by) = best;
        let mut h = 2.0 / n as f64;
        while h > 1e-9 {
            let mut improved = false;
            for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let (x, y) = (bx + dx, by + dy);
                let pt = [x, y, (y - x * x).max(0.0)];
                let dd = dist(&pt, q);
                if dd < d {
                    d = dd;
                    bx = x;
                    by = y;
                    improved = true;
                }
            }
            if !improved {
                h /= 2.0;
            }
        }
        d
    }

    #[test]
    fn cubic_roots_of_known_polynomials() {
        let mut r = real_roots_depressed_cubic(-7.0, 6.0);
        r.sort_by(f64::total_cmp);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let r = real_roots_depressed_cubic(1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_points_are_fixed() {
        let q = [0.3, 0.05, 0.1];
        assert_eq!(project_epi_max(&q), q.to_vec());
    }

    proptest! {
        #[test]
        fn projection_matches_grid_search(p in -0.6f64..0.6, s in -0.6f64..0.6, r in -0.6f64..0.6) {
            let q = [p, s, r];
            let proj = project_epi_max(&q);
            prop_assert!(in_epi_max(&proj, 1e-12));
            let d = dist(&proj, &q);
            let reference = brute_force(&q);
            prop_assert!(d <= reference + 1e-7, "closed form {d} vs grid {reference}");
        }

        #[test]
        fn projection_is_idempotent(p in -0.6f64..0.6, s in -0.6f64..0.6, r in -0.6f64..0.6) {
            let once = project_epi_max(&[p, s, r]);
            let twice = project_epi_max(&once);
            prop_assert!(dist(&once, &twice) <= 1e-10);
        }
    }
}
