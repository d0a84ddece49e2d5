//! Sample-based checks of the compatibility conditions between an objective
//! (or a set) and its active manifold.
//!
//! Every check draws points on a ladder of shells around the anchor, computes
//! a per-sample residual and compares how the worst residual scales with the
//! distance to the manifold across shells. Verdicts are three-valued since
//! sampling can falsify an inequality but never prove it.

use crate::linalg::{self, linear_fit};
use crate::problems::{Point, ProblemError, ProblemInstance, ON_SET_TOL};
use crate::rng::StreamRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residuals at or below this are treated as zero.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Violations must exceed this to produce a `fails` verdict.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Minimum fitted exponent for strong (a) and the strong (b) slope floor.
pub const SLOPE_SLACK: f64 = 0.1;
/// Inconclusive when fewer off-manifold samples are available.
pub const MIN_INFORMATIVE: usize = 8;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("cone gap of an empty set")]
    EmptyCone,
    #[error("input vector has norm {0}, expected a unit vector")]
    NotUnit(f64),
    #[error("invalid sample ladder: {0}")]
    Ladder(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLadder {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub seed: u64,
}

impl SampleLadder {
    /// Radii `r0 2^-j` for `j = 0..count`.
    pub fn dyadic(r0: f64, count: usize, samples_per_radius: usize, seed: u64) -> Self {
        Self {
            radii: (0..count).map(|j| r0 * 0.5f64.powi(j as i32)).collect(),
            samples_per_radius,
            seed,
        }
    }

    pub fn validate(&self, validity_radius: f64) -> Result<(), RegularityError> {
        let err = |m: String| Err(RegularityError::Ladder(m));
        if self.radii.len() < 2 {
            return err("need at least two radii".into());
        }
        if self.samples_per_radius < 32 {
            return err(format!("need at least 32 samples per radius, got {}", self.samples_per_radius));
        }
        if !self.radii.windows(2).all(|w| w[0] > w[1]) || self.radii.last().is_some_and(|&r| r <= 0.0) {
            return err("radii must be positive and strictly decreasing".into());
        }
        if self.radii[0] > validity_radius {
            return err(format!("largest radius {} exceeds validity radius {validity_radius}", self.radii[0]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    A,
    BLe,
    BEq,
    BGe,
    StrongA,
    StrongBLe,
    StrongBEq,
    StrongBGe,
    Aiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BVariant {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Weak,
    Strong,
}

/// Worst sampled triple: a point `x`, its partner `y` on the manifold and the
/// subgradient or unit normal `v` at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Point,
    pub y: Point,
    pub v: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSummary {
    pub radius: f64,
    pub samples: usize,
    pub informative: usize,
    /// Largest residual in the shell.
    pub max_residual: f64,
    /// Residual and distance of the sample with the largest residual/distance
    /// ratio (or largest residual, for gap-type checks).
    pub witness_residual: f64,
    pub witness_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub condition: Condition,
    pub fitted_constant: f64,
    #[serde(with = "extended_real")]
    pub fitted_exponent: f64,
    pub worst_witness: Option<Witness>,
    pub verdict: Verdict,
    pub shells: Vec<ShellSummary>,
}

/// JSON has no infinities: `+-inf` are written as strings and NaN as null.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(Option<()>),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad extended real `{t}`"))),
            Repr::Null(_) => Ok(f64::NAN),
        }
    }
}

/// `max_u |u - P_V u|` over a finite sample of unit vectors.
pub fn cone_gap(u_set: &[Point], v_project: impl Fn(&[f64]) -> Point) -> Result<f64, RegularityError> {
    if u_set.is_empty() {
        return Err(RegularityError::EmptyCone);
    }
    let mut worst: f64 = 0.0;
    for u in u_set {
        let n = linalg::norm(u);
        if (n - 1.0).abs() > 1e-10 {
            return Err(RegularityError::NotUnit(n));
        }
        worst = worst.max(linalg::dist(u, &v_project(u)));
    }
    Ok(worst)
}

/// Generators plus a few convex combinations of each pair.
fn hull_sample(gens: &[Point]) -> Vec<Point> {
    let mut out = gens.to_vec();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            for t in [0.25, 0.5, 0.75] {
                out.push(linalg::add(&linalg::scale(&gens[i], 1.0 - t), &linalg::scale(&gens[j], t)));
            }
        }
    }
    out
}

/// Unit normal cone sample for sets; subgradient sample for functions.
fn dual_sample(p: &ProblemInstance, x: &[f64]) -> Vec<Point> {
    match p.objective.set_geometry() {
        Some(geom) => hull_sample(&geom.unit_normals(x))
            .iter()
            .filter_map(|u| linalg::normalized(u))
            .collect(),
        None => hull_sample(&p.objective.subgrad_generators(x)),
    }
}

fn shell_points(p: &ProblemInstance, ladder: &SampleLadder, shell: usize) -> Vec<Point> {
    let mut rng = StreamRng::new(ladder.seed, shell as u64).at(0);
    (0..ladder.samples_per_radius)
        .map(|_| p.sample_shell(&mut rng, ladder.radii[shell]))
        .collect()
}

struct Sample {
    x: Point,
    y: Point,
    v: Point,
    dist: f64,
    residual: f64,
}

fn prepare(p: &ProblemInstance, ladder: &SampleLadder) -> Result<(), RegularityError> {
    let m = p.manifold()?;
    ladder.validate(m.validity_radius())
}

/// Tangential residual of the worst dual element at each shell sample.
fn tangent_residuals(p: &ProblemInstance, ladder: &SampleLadder) -> Result<Vec<Vec<Sample>>, RegularityError> {
    prepare(p, ladder)?;
    let m = p.manifold()?;
    let is_set = p.is_set_instance();
    let mut shells = Vec::with_capacity(ladder.radii.len());
    for j in 0..ladder.radii.len() {
        let mut samples = Vec::new();
        for x in shell_points(p, ladder, j) {
            if !p.objective.in_domain(&x) {
                continue;
            }
            let y = m.project(&x);
            let dist = linalg::dist(&x, &y);
            let grad_m = m.cov_grad(&y);
            let best = dual_sample(p, &x)
                .into_iter()
                .map(|v| {
                    let r = if is_set {
                        linalg::norm(&m.tangent_project(&y, &v))
                    } else {
                        let t = m.tangent_project(&y, &linalg::sub(&v, &grad_m));
                        linalg::norm(&t) / (1.0 + linalg::dot(&v, &v)).sqrt()
                    };
                    (r, v)
                })
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((residual, v)) = best {
                samples.push(Sample { x, y, v, dist, residual });
            }
        }
        shells.push(samples);
    }
    Ok(shells)
}

fn summarize(radius: f64, samples: &[Sample], witness: Option<&Sample>) -> ShellSummary {
    ShellSummary {
        radius,
        samples: samples.len(),
        informative: samples.iter().filter(|s| s.dist > ON_SET_TOL).count(),
        max_residual: samples.iter().map(|s| s.residual).fold(0.0, f64::max),
        witness_residual: witness.map_or(0.0, |w| w.residual),
        witness_distance: witness.map_or(0.0, |w| w.dist),
    }
}

fn witness_of(s: &Sample) -> Witness {
    Witness {
        x: s.x.clone(),
        y: s.y.clone(),
        v: s.v.clone(),
    }
}

/// Log-log fit of witness residual against witness distance across shells.
/// Returns `(exponent, constant)`; `+inf` exponent when every residual
/// vanishes, `None` when the data cannot support a fit.
fn fit_witnesses(witnesses: &[(f64, f64)]) -> Option<(f64, f64)> {
    if witnesses.iter().all(|&(_, r)| r <= RESIDUAL_TOL) {
        return Some((f64::INFINITY, 0.0));
    }
    let pts: Vec<(f64, f64)> = witnesses
        .iter()
        .filter(|&&(d, r)| d > ON_SET_TOL && r > RESIDUAL_TOL)
        .map(|&(d, r)| (d.ln(), r.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&xs, &ys).map(|(slope, intercept, _)| (slope, intercept.exp()))
}

/// Per-shell witness maximizing `residual / dist`.
fn ratio_witnesses(shells: &[Vec<Sample>]) -> Vec<Option<&Sample>> {
    shells
        .iter()
        .map(|s| {
            s.iter()
                .filter(|s| s.dist > ON_SET_TOL)
                .max_by(|a, b| (a.residual / a.dist).total_cmp(&(b.residual / b.dist)))
        })
        .collect()
}

fn gap_exponent_report(
    p: &ProblemInstance,
    ladder: &SampleLadder,
    condition: Condition,
) -> Result<RegularityReport, RegularityError> {
    let shells = tangent_residuals(p, ladder)?;
    let witnesses = ratio_witnesses(&shells);
    let summaries: Vec<ShellSummary> = ladder
        .radii
        .iter()
        .zip(&shells)
        .zip(&witnesses)
        .map(|((&r, s), w)| summarize(r, s, *w))
        .collect();
    let informative: usize = summaries.iter().map(|s| s.informative).sum();
    let worst = witnesses.last().copied().flatten().map(witness_of);
    let all_zero = shells.iter().flatten().all(|s| s.residual <= RESIDUAL_TOL);
    if informative < MIN_INFORMATIVE {
        return Ok(RegularityReport {
            condition,
            fitted_constant: 0.0,
            fitted_exponent: f64::NAN,
            worst_witness: worst,
            verdict: Verdict::Inconclusive,
            shells: summaries,
        });
    }
    let pairs: Vec<(f64, f64)> = witnesses
        .iter()
        .flatten()
        .map(|s| (s.dist, s.residual))
        .collect();
    let fit = fit_witnesses(&pairs);
    let smallest_residual = shells.last().map_or(0.0, |s| {
        s.iter().map(|s| s.residual).fold(0.0, f64::max)
    });
    let (exponent, constant) = fit.unwrap_or((f64::NAN, 0.0));
    let verdict = if all_zero || exponent >= 1.0 - SLOPE_SLACK {
        Verdict::Holds
    } else if fit.is_some() && smallest_residual > VIOLATION_TOL {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(RegularityReport {
        condition,
        fitted_constant: constant,
        fitted_exponent: exponent,
        worst_witness: worst,
        verdict,
        shells: summaries,
    })
}

/// Strong (a): the tangential part of `v - grad_M f(y)` (or of a unit normal,
/// for sets) should vanish linearly in `|x - y|`.
pub fn check_strong_a(p: &ProblemInstance, ladder: &SampleLadder) -> Result<RegularityReport, RegularityError> {
    gap_exponent_report(p, ladder, Condition::StrongA)
}

/// Exponent of the gap-versus-distance power law; `+inf` when the gap
/// vanishes identically.
pub fn fit_sqrt_gap(p: &ProblemInstance, ladder: &SampleLadder) -> Result<f64, RegularityError> {
    let report = gap_exponent_report(p, ladder, Condition::StrongA)?;
    Ok(report.fitted_exponent)
}

/// Condition (a): the largest tangential residual per shell should shrink
/// toward the anchor.
pub fn check_a(p: &ProblemInstance, ladder: &SampleLadder) -> Result<RegularityReport, RegularityError> {
    let shells = tangent_residuals(p, ladder)?;
    let witnesses: Vec<Option<&Sample>> = shells
        .iter()
        .map(|s| s.iter().max_by(|a, b| a.residual.total_cmp(&b.residual)))
        .collect();
    let summaries: Vec<ShellSummary> = ladder
        .radii
        .iter()
        .zip(&shells)
        .zip(&witnesses)
        .map(|((&r, s), w)| summarize(r, s, *w))
        .collect();
    let first = summaries.first().map_or(0.0, |s| s.max_residual);
    let last = summaries.last().map_or(0.0, |s| s.max_residual);
    let verdict = if summaries.iter().all(|s| s.samples == 0) {
        Verdict::Inconclusive
    } else if last <= VIOLATION_TOL || last <= 0.5 * first {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let pairs: Vec<(f64, f64)> = summaries.iter().map(|s| (s.radius, s.max_residual)).collect();
    let (exponent, constant) = fit_witnesses(&pairs).unwrap_or((f64::NAN, 0.0));
    Ok(RegularityReport {
        condition: Condition::A,
        fitted_constant: constant,
        fitted_exponent: exponent,
        worst_witness: witnesses.last().copied().flatten().map(witness_of),
        verdict,
        shells: summaries,
    })
}

fn b_condition(variant: BVariant, strength: Strength) -> Condition {
    match (variant, strength) {
        (BVariant::Le, Strength::Weak) => Condition::BLe,
        (BVariant::Eq, Strength::Weak) => Condition::BEq,
        (BVariant::Ge, Strength::Weak) => Condition::BGe,
        (BVariant::Le, Strength::Strong) => Condition::StrongBLe,
        (BVariant::Eq, Strength::Strong) => Condition::StrongBEq,
        (BVariant::Ge, Strength::Strong) => Condition::StrongBGe,
    }
}

/// Normalized lower-Taylor excess `(f(x) + <v, y - x> - f(y)) / sqrt(1 + |v|^2)`
/// (for sets `<u, y - x>` with `u` a unit normal), reduced to the violation of
/// the requested one- or two-sided inequality.
fn violation(p: &ProblemInstance, variant: BVariant, x: &[f64], y: &[f64], v: &[f64]) -> f64 {
    let step = linalg::sub(y, x);
    let excess = if p.is_set_instance() {
        linalg::dot(v, &step)
    } else {
        let f = &p.objective;
        (f.value(x) + linalg::dot(v, &step) - f.value(y)) / (1.0 + linalg::dot(v, v)).sqrt()
    };
    match variant {
        BVariant::Le => excess.max(0.0),
        BVariant::Eq => excess.abs(),
        BVariant::Ge => (-excess).max(0.0),
    }
}

/// Condition (b) in its weak (`o(|y - x|)`) or strong (`O(|y - x|^2)`) form.
pub fn check_b(
    p: &ProblemInstance,
    variant: BVariant,
    strength: Strength,
    ladder: &SampleLadder,
) -> Result<RegularityReport, RegularityError> {
    prepare(p, ladder)?;
    let m = p.manifold()?;
    let anchor = m.anchor().to_vec();
    let condition = b_condition(variant, strength);
    let power = match strength {
        Strength::Weak => 1,
        Strength::Strong => 2,
    };
    let mut shells: Vec<Vec<Sample>> = Vec::with_capacity(ladder.radii.len());
    let (mut drawn, mut skipped) = (0usize, 0usize);
    for (j, &r) in ladder.radii.iter().enumerate() {
        let mut partner_rng = StreamRng::new(ladder.seed, j as u64).at(1);
        let mut samples = Vec::new();
        for x in shell_points(p, ladder, j) {
            drawn += 1;
            let w = crate::problems::random_unit(&mut partner_rng, anchor.len());
            let y = m.project(&linalg::axpy(&anchor, r, &w));
            if !p.objective.in_domain(&x) || !p.objective.in_domain(&y) {
                skipped += 1;
                continue;
            }
            let dist = linalg::dist(&x, &y);
            if dist <= ON_SET_TOL {
                continue;
            }
            let best = dual_sample(p, &x)
                .into_iter()
                .map(|v| (violation(p, variant, &x, &y, &v), v))
                .max_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((viol, v)) = best {
                samples.push(Sample {
                    residual: viol / dist.powi(power),
                    x,
                    y,
                    v,
                    dist,
                });
            }
        }
        shells.push(samples);
    }
    let witnesses: Vec<Option<&Sample>> = shells
        .iter()
        .map(|s| s.iter().max_by(|a, b| a.residual.total_cmp(&b.residual)))
        .collect();
    let summaries: Vec<ShellSummary> = ladder
        .radii
        .iter()
        .zip(&shells)
        .zip(&witnesses)
        .map(|((&r, s), w)| summarize(r, s, *w))
        .collect();
    let worst = witnesses.last().copied().flatten().map(witness_of);
    let informative: usize = summaries.iter().map(|s| s.informative).sum();
    if skipped * 10 > drawn * 9 || informative < MIN_INFORMATIVE {
        return Ok(RegularityReport {
            condition,
            fitted_constant: 0.0,
            fitted_exponent: f64::NAN,
            worst_witness: worst,
            verdict: Verdict::Inconclusive,
            shells: summaries,
        });
    }
    let pairs: Vec<(f64, f64)> = witnesses.iter().flatten().map(|s| (s.dist, s.residual)).collect();
    let fit = fit_witnesses(&pairs);
    let (exponent, constant) = fit.unwrap_or((f64::NAN, 0.0));
    let ratio_large = summaries.first().map_or(0.0, |s| s.max_residual);
    let ratio_small = summaries.last().map_or(0.0, |s| s.max_residual);
    let holds = match strength {
        _ if ratio_small <= VIOLATION_TOL => true,
        Strength::Weak => ratio_small <= 0.5 * ratio_large,
        Strength::Strong => exponent >= -SLOPE_SLACK,
    };
    let verdict = if holds {
        Verdict::Holds
    } else if fit.is_some() || strength == Strength::Weak {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(RegularityReport {
        condition,
        fitted_constant: constant,
        fitted_exponent: exponent,
        worst_witness: worst,
        verdict,
        shells: summaries,
    })
}

/// Sampled aiming constant `inf <v, x - P_M x> / dist(x, M)` over the two
/// innermost shells, with the report.
pub fn estimate_aiming(
    p: &ProblemInstance,
    ladder: &SampleLadder,
) -> Result<(f64, RegularityReport), RegularityError> {
    prepare(p, ladder)?;
    let m = p.manifold()?;
    let n = ladder.radii.len();
    let mut shells: Vec<Vec<Sample>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut samples = Vec::new();
        if j + 2 >= n {
            for x in shell_points(p, ladder, j) {
                if !p.objective.in_domain(&x) {
                    continue;
                }
                let y = m.project(&x);
                let dist = linalg::dist(&x, &y);
                if dist <= ON_SET_TOL {
                    continue;
                }
                let normal = linalg::sub(&x, &y);
                let worst = p
                    .objective
                    .subgrad_generators(&x)
                    .into_iter()
                    .map(|v| (linalg::dot(&v, &normal) / dist, v))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((ratio, v)) = worst {
                    samples.push(Sample { x, y, v, dist, residual: ratio });
                }
            }
        }
        shells.push(samples);
    }
    let inner = shells.iter().flatten();
    let witness = inner.min_by(|a, b| a.residual.total_cmp(&b.residual));
    let summaries: Vec<ShellSummary> = ladder
        .radii
        .iter()
        .zip(&shells)
        .map(|(&r, s)| {
            let w = s.iter().min_by(|a, b| a.residual.total_cmp(&b.residual));
            let mut sum = summarize(r, s, w);
            sum.max_residual = w.map_or(0.0, |w| w.residual);
            sum
        })
        .collect();
    let Some(w) = witness else {
        return Ok((
            f64::NAN,
            RegularityReport {
                condition: Condition::Aiming,
                fitted_constant: f64::NAN,
                fitted_exponent: f64::NAN,
                worst_witness: None,
                verdict: Verdict::Inconclusive,
                shells: summaries,
            },
        ));
    };
    let mu = w.residual;
    Ok((
        mu,
        RegularityReport {
            condition: Condition::Aiming,
            fitted_constant: mu,
            fitted_exponent: 1.0,
            worst_witness: Some(witness_of(w)),
            verdict: if mu > 0.05 { Verdict::Holds } else { Verdict::Fails },
            shells: summaries,
        },
    ))
}

/// Runs the check named by `condition`.
pub fn check(
    p: &ProblemInstance,
    condition: Condition,
    ladder: &SampleLadder,
) -> Result<RegularityReport, RegularityError> {
    use BVariant::*;
    use Strength::*;
    match condition {
        Condition::A => check_a(p, ladder),
        Condition::StrongA => check_strong_a(p, ladder),
        Condition::BLe => check_b(p, Le, Weak, ladder),
        Condition::BEq => check_b(p, Eq, Weak, ladder),
        Condition::BGe => check_b(p, Ge, Weak, ladder),
        Condition::StrongBLe => check_b(p, Le, Strong, ladder),
        Condition::StrongBEq => check_b(p, Eq, Strong, ladder),
        Condition::StrongBGe => check_b(p, Ge, Strong, ladder),
        Condition::Aiming => estimate_aiming(p, ladder).map(|(_, r)| r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{problem_by_label, tilt};
    use proptest::prelude::*;

    fn ladder() -> SampleLadder {
        SampleLadder::dyadic(0.25, 8, 256, 17)
    }

    fn x_axis(u: &[f64]) -> Point {
        vec![u[0], 0.0]
    }

    #[test]
    fn cone_gap_examples() {
        assert_eq!(cone_gap(&[vec![1.0, 0.0]], x_axis).unwrap(), 0.0);
        assert_eq!(cone_gap(&[vec![0.0, 1.0]], x_axis).unwrap(), 1.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cone_gap(&[vec![r, r]], x_axis).unwrap() - r).abs() < 1e-15);
        assert!(matches!(cone_gap(&[], x_axis), Err(RegularityError::EmptyCone)));
        assert!(matches!(cone_gap(&[vec![2.0, 0.0]], x_axis), Err(RegularityError::NotUnit(_))));
    }

    proptest! {
        #[test]
        fn cone_gap_is_monotone_and_bounded(
            angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 1..8),
            extra in 0.0f64..std::f64::consts::TAU,
        ) {
            let us: Vec<Point> = angles.iter().map(|t| vec![t.cos(), t.sin()]).collect();
            let base = cone_gap(&us, x_axis).unwrap();
            let mut more = us.clone();
            more.push(vec![extra.cos(), extra.sin()]);
            prop_assert!(cone_gap(&more, x_axis).unwrap() >= base);
            prop_assert!(base <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn ladder_validation() {
        assert!(ladder().validate(0.5).is_ok());
        assert!(SampleLadder::dyadic(0.25, 8, 16, 0).validate(0.5).is_err());
        assert!(SampleLadder::dyadic(1.0, 8, 64, 0).validate(0.5).is_err());
        let mut l = ladder();
        l.radii.swap(0, 1);
        assert!(l.validate(0.5).is_err());
    }

    #[test]
    fn strong_a_regressions() {
        let l = ladder();
        for label in ["Z1", "Z6", "Z7"] {
            let r = check_strong_a(&problem_by_label(label).unwrap(), &l).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "{label}: {r:?}");
        }
        let z1 = check_strong_a(&problem_by_label("Z1").unwrap(), &l).unwrap();
        assert!(z1.shells.iter().all(|s| s.max_residual == 0.0));
        assert_eq!(z1.fitted_exponent, f64::INFINITY);
        for label in ["Z3", "Z5"] {
            let r = check_strong_a(&problem_by_label(label).unwrap(), &l).unwrap();
            assert_eq!(r.verdict, Verdict::Fails, "{label}: {r:?}");
        }
    }

    #[test]
    fn point_stratum_has_no_tangential_gap() {
        // Normals to a point fill the whole space, so the curve's normal
        // cones can never stick out of them.
        let r = check_strong_a(&problem_by_label("Z4").unwrap(), &ladder()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.shells.iter().all(|s| s.max_residual == 0.0));
    }

    #[test]
    fn square_root_gap_exponents() {
        let l = ladder();
        let z3 = fit_sqrt_gap(&problem_by_label("Z3").unwrap(), &l).unwrap();
        assert!((0.4..=0.6).contains(&z3), "{z3}");
        let z1 = fit_sqrt_gap(&problem_by_label("Z1").unwrap(), &l).unwrap();
        assert_eq!(z1, f64::INFINITY);
        let z5 = fit_sqrt_gap(&problem_by_label("Z5").unwrap(), &l).unwrap();
        assert!(z5.abs() < 0.1, "{z5}");
    }

    #[test]
    fn umbrella_fails_condition_a() {
        let r = check_a(&problem_by_label("Z5").unwrap(), &ladder()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(r.shells.iter().all(|s| s.max_residual >= 0.6), "{:?}", r.shells);
    }

    #[test]
    fn curve_fails_strong_b_eq_with_half_power() {
        let r = check_b(&problem_by_label("Z4").unwrap(), BVariant::Eq, Strength::Strong, &ladder()).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!((-0.6..=-0.4).contains(&r.fitted_exponent), "{}", r.fitted_exponent);
    }

    #[test]
    fn convex_member_has_no_b_le_excess() {
        let abs = problem_by_label("abs").unwrap();
        let r = check_b(&abs, BVariant::Le, Strength::Weak, &ladder()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.fitted_constant, 0.0);
        assert!(r.shells.iter().all(|s| s.max_residual <= 1e-12));
    }

    #[test]
    fn z1_satisfies_b_eq() {
        let r = check_b(&problem_by_label("Z1").unwrap(), BVariant::Eq, Strength::Weak, &ladder()).unwrap();
        assert_eq!(r.verdict, Verdict::Holds, "{r:?}");
    }

    #[test]
    fn aiming_constants() {
        let l = ladder();
        for label in ["Z1", "Z2"] {
            let (mu, r) = estimate_aiming(&problem_by_label(label).unwrap(), &l).unwrap();
            assert!((0.999..=1.001).contains(&mu), "{label}: {mu}");
            assert_eq!(r.verdict, Verdict::Holds);
        }
        for label in ["Z6", "Z7"] {
            let (mu, _) = estimate_aiming(&problem_by_label(label).unwrap(), &l).unwrap();
            assert!(mu > 0.05, "{label}: {mu}");
        }
        let tilted = tilt(&problem_by_label("Z1").unwrap(), &[0.3, 0.0]).unwrap();
        let (mu, _) = estimate_aiming(&tilted, &l).unwrap();
        assert!((mu - 0.7).abs() < 1e-9, "{mu}");
    }

    #[test]
    fn reports_are_deterministic_and_serialize() {
        let p = problem_by_label("Z3").unwrap();
        let a = check_strong_a(&p, &ladder()).unwrap();
        let b = check_strong_a(&p, &ladder()).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        assert_eq!(ja, serde_json::to_string(&b).unwrap());
        let back: RegularityReport = serde_json::from_str(&ja).unwrap();
        assert_eq!(back, a);
        let z1 = check_strong_a(&problem_by_label("Z1").unwrap(), &ladder()).unwrap();
        let v = serde_json::to_value(&z1).unwrap();
        assert_eq!(v["fitted_exponent"], "inf");
        assert_eq!(v["condition"], "strong_a");
    }

    #[test]
    fn witnesses_lie_in_sampled_region() {
        let l = ladder();
        for label in ["Z1", "Z3", "Z5", "Z6"] {
            let p = problem_by_label(label).unwrap();
            let r = check_strong_a(&p, &l).unwrap();
            let w = r.worst_witness.unwrap();
            let anchor = p.anchor().unwrap();
            assert!(linalg::dist(&w.x, anchor) <= 2.0 * l.radii[0]);
        }
    }
}
