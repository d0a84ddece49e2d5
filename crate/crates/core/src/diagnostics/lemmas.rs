//! Worst-case simulations of three step-size recursions, run with equality.
//!
//! - `squared`: `s_{k+1} = (1 - c k^-g) s_k + C k^-2g`
//! - `distance`: `s_{k+1}^2 = s_k^2 - c k^-g s_k + C k^-2g`
//! - `fastsum`: `X_{k+1} = (1 - c k^-g) X_k - Y_k + Z_k` with
//!   `Y_k = rho k^-g sqrt(X_k)` and `Z_k = C k^-2g`
//!
//! Each is clamped at zero and reports `sup_k s_k k^g` at two horizons.

use super::DiagnosticsError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Squared,
    Distance,
    Fastsum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub gamma: f64,
    pub k0: usize,
    pub s0: f64,
    /// Coefficient of the subtracted term in `fastsum`.
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub params: LemmaParams,
    pub horizons: Vec<usize>,
    /// `sup_{k0 <= k <= K} s_k k^gamma` for each horizon `K`.
    pub sup_scaled: Vec<f64>,
    /// `sup a_k X_k` with `a_k = k^(2g-1) / log^2(k+1)` (fastsum only).
    pub sup_weighted: Option<Vec<f64>>,
    pub final_scaled: f64,
    /// Relative change of the supremum between the two horizons.
    pub relative_change: f64,
    pub bounded: bool,
}

fn check(params: &LemmaParams, lemma: Lemma) -> Result<(), DiagnosticsError> {
    let bad = |m: String| Err(DiagnosticsError::Hypothesis(m));
    let LemmaParams { c, big_c, gamma, k0, s0, rho } = *params;
    if !(gamma > 0.5 && gamma <= 1.0) {
        return bad(format!("gamma must lie in (1/2, 1], got {gamma}"));
    }
    if c.is_nan() || c <= 0.0 || big_c < 0.0 || s0 < 0.0 || rho < 0.0 || k0 == 0 {
        return bad("need c > 0, C >= 0, s0 >= 0, rho >= 0 and k0 >= 1".into());
    }
    match lemma {
        Lemma::Squared if gamma == 1.0 && c < 16.0 => bad(format!("c = {c} < 16 with gamma = 1")),
        Lemma::Fastsum if gamma == 1.0 && c < 6.0 => bad(format!("c = {c} < 6 with gamma = 1")),
        Lemma::Distance if s0 > c / (12.0 * gamma) => {
            bad(format!("s_k0 = {s0} exceeds c / (12 gamma) = {}", c / (12.0 * gamma)))
        }
        Lemma::Squared | Lemma::Fastsum if c * (k0 as f64).powf(-gamma) > 1.0 => {
            bad(format!("contraction factor 1 - c k0^-gamma is negative at k0 = {k0}"))
        }
        _ => Ok(()),
    }
}

/// Runs the recursion to each horizon in `horizons` (ascending) and reports
/// the scaled suprema. `bounded` holds when the last two agree to 1%.
pub fn sequence_lemma_oracle(
    lemma: Lemma,
    params: LemmaParams,
    horizons: &[usize],
) -> Result<LemmaReport, DiagnosticsError> {
    check(&params, lemma)?;
    let LemmaParams { c, big_c, gamma, k0, s0, rho } = params;
    let kmax = horizons.iter().copied().max().unwrap_or(k0);
    let bound = c / (12.0 * gamma);
    let mut s = s0;
    let mut sup = s0 * (k0 as f64).powf(gamma);
    let mut sup_w: f64 = 0.0;
    let mut sup_at = Vec::with_capacity(horizons.len());
    let mut sup_w_at = Vec::with_capacity(horizons.len());
    let mut targets = horizons.iter().copied().peekable();
    while targets.peek().is_some_and(|&h| h <= k0) {
        targets.next();
        sup_at.push(sup);
        sup_w_at.push(sup_w);
    }
    for k in k0..kmax {
        let kf = k as f64;
        let step = kf.powf(-gamma);
        let noise = big_c * kf.powf(-2.0 * gamma);
        s = match lemma {
            Lemma::Squared => ((1.0 - c * step) * s + noise).max(0.0),
            Lemma::Distance => (s * s - c * step * s + noise).max(0.0).sqrt(),
            Lemma::Fastsum => ((1.0 - c * step) * s - rho * step * s.sqrt() + noise).max(0.0),
        };
        if lemma == Lemma::Distance && s > bound {
            return Err(DiagnosticsError::Hypothesis(format!(
                "s_{} = {s} exceeds c / (12 gamma) = {bound}",
                k + 1
            )));
        }
        let next = (k + 1) as f64;
        sup = sup.max(s * next.powf(gamma));
        if lemma == Lemma::Fastsum {
            let a = next.powf(2.0 * gamma - 1.0) / (next + 1.0).ln().powi(2);
            sup_w = sup_w.max(a * s);
        }
        while targets.peek() == Some(&(k + 1)) {
            targets.next();
            sup_at.push(sup);
            sup_w_at.push(sup_w);
        }
    }
    let final_scaled = s * (kmax as f64).powf(gamma);
    let relative_change = match sup_at.as_slice() {
        [.., a, b] if *b > 0.0 => (b - a).abs() / b,
        [.., _, _] => 0.0,
        _ => f64::NAN,
    };
    Ok(LemmaReport {
        lemma,
        params,
        horizons: horizons.to_vec(),
        bounded: sup_at.iter().all(|v| v.is_finite()) && relative_change <= 0.01,
        sup_scaled: sup_at,
        sup_weighted: (lemma == Lemma::Fastsum).then_some(sup_w_at),
        final_scaled,
        relative_change,
    })
}
