use super::DiagnosticsError;
use crate::linalg;
use crate::problems::{Point, ProblemInstance};
use crate::solvers::IterateTrace;
use serde::{Deserialize, Serialize};

/// One step of the shadow recursion
/// `y_{k+1} = y_k - a_k grad_M f(y_k) - a_k xi_k + a_k E_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowRecord {
    pub k: usize,
    pub y: Point,
    /// Tangential part of the noise.
    pub xi: Point,
    /// Error term solved from the recursion.
    pub e: Point,
    pub xi_norm: f64,
    pub e_norm: f64,
    /// `dist(x_k, M)` of the underlying iterate.
    pub dist: f64,
    pub alpha: f64,
    /// Re-evaluation error of the recursion with the stored fields.
    pub residual: f64,
    /// Whether every iterate up to `k` stayed within `delta` of the anchor.
    pub in_ball: bool,
}

/// Shadow sequence of a trace: `y_k = P_M(x_k)` while `x_k` lies within `2 delta`
/// of the anchor, the anchor otherwise.
pub fn shadow_sequence(
    trace: &IterateTrace,
    p: &ProblemInstance,
    delta: f64,
) -> Result<Vec<ShadowRecord>, DiagnosticsError> {
    let m = p.manifold()?;
    if 4.0 * delta > m.validity_radius() {
        return Err(DiagnosticsError::ShadowRadius {
            delta,
            radius: m.validity_radius(),
        });
    }
    let last = trace.final_point().ok_or(DiagnosticsError::EmptyTrace)?;
    let d = p.dim();
    let anchor = m.anchor().to_vec();
    let shadow = |x: &[f64]| {
        if linalg::dist(x, &anchor) <= 2.0 * delta {
            m.project(x)
        } else {
            anchor.clone()
        }
    };
    let mut out = Vec::with_capacity(trace.records.len());
    let mut in_ball = true;
    let mut y = shadow(&trace.records[0].x);
    for (i, r) in trace.records.iter().enumerate() {
        if r.nu.len() != d {
            return Err(DiagnosticsError::MissingNoise {
                k: r.k,
                got: r.nu.len(),
                expected: d,
            });
        }
        let next_x = trace.records.get(i + 1).map_or(&last, |n| &n.x);
        let y_next = shadow(next_x);
        let alpha = trace.step(r.k);
        in_ball &= linalg::dist(&r.x, &anchor) <= delta;
        let grad = m.cov_grad(&y);
        let xi = m.tangent_project(&y, &r.nu);
        // E = (y_{k+1} - y_k) / a + grad + xi
        let e: Point = (0..d)
            .map(|j| (y_next[j] - y[j]) / alpha + grad[j] + xi[j])
            .collect();
        let rebuilt: Point = (0..d)
            .map(|j| y[j] - alpha * grad[j] - alpha * xi[j] + alpha * e[j])
            .collect();
        out.push(ShadowRecord {
            k: r.k,
            xi_norm: linalg::norm(&xi),
            e_norm: linalg::norm(&e),
            dist: m.distance(&r.x),
            alpha,
            residual: linalg::dist(&rebuilt, &y_next),
            in_ball,
            y: std::mem::replace(&mut y, y_next),
            xi,
            e,
        });
    }
    Ok(out)
}

/// `|E_k| / ((1 + r)^2 (dist(x_k, M) + a_k))` at every in-ball step.
pub fn error_bound_ratios(records: &[ShadowRecord], r: f64) -> Vec<f64> {
    let scale = (1.0 + r).powi(2);
    records
        .iter()
        .filter(|s| s.in_ball)
        .map(|s| s.e_norm / (scale * (s.dist + s.alpha)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::problem_by_label;
    use crate::rng::StreamRng;
    use crate::solvers::{run, MappingKind, NoiseModel, RunSpec, StepRecord, StepSchedule};

    fn spec(mapping: MappingKind, steps: usize, seed: u64) -> RunSpec {
        RunSpec {
            mapping,
            schedule: StepSchedule::new(0.1, 0.7),
            noise: NoiseModel::UniformBall { r: 0.1 },
            steps,
            seed,
            trial: 0,
        }
    }

    #[test]
    fn z1_error_vanishes() {
        let z1 = problem_by_label("Z1").unwrap();
        let t = run(&z1, spec(MappingKind::Subgradient, 3000, 4), vec![0.02, -0.01]).unwrap();
        let s = shadow_sequence(&t, &z1, 0.1).unwrap();
        assert!(s.iter().any(|r| r.in_ball));
        for r in s.iter().filter(|r| r.in_ball) {
            assert!(r.e_norm <= 1e-10, "k={} |E|={}", r.k, r.e_norm);
            assert!(r.residual <= 1e-10);
        }
    }

    #[test]
    fn xi_is_tangent() {
        let z6 = problem_by_label("Z6").unwrap();
        let m = z6.manifold().unwrap();
        let t = run(&z6, spec(MappingKind::Subgradient, 500, 2), vec![0.01, 0.01, 0.01]).unwrap();
        for r in shadow_sequence(&t, &z6, 0.1).unwrap() {
            assert_eq!(m.tangent_project(&r.y, &r.xi), r.xi);
        }
    }

    #[test]
    fn z6_error_is_bounded_by_distance_and_step() {
        let z6 = problem_by_label("Z6").unwrap();
        let t = run(&z6, spec(MappingKind::Subgradient, 2000, 8), vec![0.01, -0.02, 0.01]).unwrap();
        let s = shadow_sequence(&t, &z6, 0.1).unwrap();
        let ratios = error_bound_ratios(&s, 0.1);
        assert!(!ratios.is_empty());
        // |E| = b |x0| <= b dist for this instance.
        assert!(ratios.iter().all(|&q| q <= 0.5), "{:?}", ratios.iter().cloned().fold(0.0, f64::max));
        assert!(s.iter().filter(|r| r.in_ball).any(|r| r.e_norm > 0.0));
    }

    #[test]
    fn far_iterates_shadow_to_the_anchor() {
        let z1 = problem_by_label("Z1").unwrap();
        let rec = |k, x: Vec<f64>| StepRecord { k, x, nu: vec![0.0, 0.0], g: vec![0.0, 0.0], dist: None, f: 0.0 };
        let trace = IterateTrace {
            spec: spec(MappingKind::Subgradient, 2, 0),
            records: vec![rec(1, vec![0.3, 0.3]), rec(2, vec![0.01, 0.02])],
        };
        let s = shadow_sequence(&trace, &z1, 0.1).unwrap();
        assert_eq!(s[0].y, vec![0.0, 0.0]);
        assert!(!s[0].in_ball && !s[1].in_ball);
        assert_eq!(s[1].y, vec![0.0, 0.02]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let z1 = problem_by_label("Z1").unwrap();
        let mut t = run(&z1, spec(MappingKind::Subgradient, 5, 0), vec![0.0, 0.0]).unwrap();
        assert!(matches!(shadow_sequence(&t, &z1, 0.2), Err(DiagnosticsError::ShadowRadius { .. })));
        t.records[2].nu.clear();
        assert!(matches!(shadow_sequence(&t, &z1, 0.1), Err(DiagnosticsError::MissingNoise { k: 3, .. })));
    }

    #[test]
    fn tangential_noise_has_zero_mean() {
        let z6 = problem_by_label("Z6").unwrap();
        let m = z6.manifold().unwrap();
        let y = [0.0, 0.0, 0.05];
        let noise = NoiseModel::UniformBall { r: 0.1 };
        let stream = StreamRng::new(99, 0);
        let n = 10_000;
        let mut mean = vec![0.0; 3];
        for k in 0..n {
            let xi = m.tangent_project(&y, &noise.sample(&mut stream.at(k), 3));
            mean = linalg::axpy(&mean, 1.0 / n as f64, &xi);
        }
        assert!(linalg::norm(&mean) <= 4.0 * 0.1 / (n as f64).sqrt());
    }
}
