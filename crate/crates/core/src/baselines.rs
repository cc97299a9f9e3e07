//! Comparator procedures: BH, Storey-BH, accumulation tests, Adaptive
//! SeqStep and an ordered SABHA variant.
//!
//! Ordered procedures take p-values in prior order and report the prefix
//! length they scanned in [`DecisionResult::threshold`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isotonic::pava;
use crate::lfdr::DecisionResult;
use crate::mixture::storey_pi0;

/// Floor for the SABHA null-proportion weights.
pub const SABHA_FLOOR: f64 = 0.1;
/// Default SABHA censoring level.
pub const SABHA_TAU: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("accumulation constant C must exceed 1, got {0}")]
    BadConstant(f64),
    #[error("{name} must lie in (0, 1), got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    #[error("s = {s} exceeds lam = {lam}")]
    SAboveLam { s: f64, lam: f64 },
}

fn unit_open(name: &'static str, value: f64) -> Result<(), BaselineError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(BaselineError::OutOfUnitInterval { name, value })
    }
}

/// Largest sorted p-value meeting `p₍ₖ₎ ≤ kα/m`, or `None`.
fn bh_cutoff(scores: &[f64], level: f64) -> Option<f64> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .rev()
        .find(|&(k, &p)| p * m <= (k + 1) as f64 * level)
        .map(|(_, &p)| p)
}

fn bh_at_level(scores: Vec<f64>, level: f64, alpha: f64, method: &str) -> DecisionResult {
    let cutoff = bh_cutoff(&scores, level);
    let rejected = scores
        .iter()
        .map(|&p| cutoff.is_some_and(|c| p <= c))
        .collect();
    DecisionResult::from_rejections(scores, rejected, cutoff.unwrap_or(0.0), alpha, method)
}

/// Benjamini–Hochberg step-up at level `alpha`.
pub fn bh(pvalues: &[f64], alpha: f64) -> DecisionResult {
    bh_at_level(pvalues.to_vec(), alpha, alpha, "bh")
}

/// BH at level `alpha / π̂₀` with the Storey estimate of the null proportion.
pub fn storey_bh(pvalues: &[f64], alpha: f64) -> DecisionResult {
    let pi0 = storey_pi0(pvalues);
    let level = if pi0 > 0.0 {
        alpha / pi0
    } else {
        f64::INFINITY
    };
    bh_at_level(pvalues.to_vec(), level, alpha, "st")
}

/// Accumulation function `h̃` with `∫₀¹ h̃ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "c")]
pub enum AccumulationKind {
    /// `h̃(p) = −ln(1 − p)`.
    ForwardStop,
    /// `h̃(p) = C·1{p > 1 − 1/C}`.
    SeqStep(f64),
    /// `h̃(p) = C·ln(1/(C(1 − p)))·1{p > 1 − 1/C}`.
    HingeExp(f64),
}

impl AccumulationKind {
    pub fn validate(&self) -> Result<(), BaselineError> {
        match *self {
            AccumulationKind::ForwardStop => Ok(()),
            AccumulationKind::SeqStep(c) | AccumulationKind::HingeExp(c) => {
                if c > 1.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(BaselineError::BadConstant(c))
                }
            }
        }
    }

    pub fn h(&self, p: f64) -> f64 {
        match *self {
            AccumulationKind::ForwardStop => -(-p).ln_1p(),
            AccumulationKind::SeqStep(c) => {
                if p > 1.0 - 1.0 / c {
                    c
                } else {
                    0.0
                }
            }
            AccumulationKind::HingeExp(c) => {
                if p > 1.0 - 1.0 / c {
                    -c * (c * (1.0 - p)).ln()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            AccumulationKind::ForwardStop => "forwardstop",
            AccumulationKind::SeqStep(_) => "seqstep",
            AccumulationKind::HingeExp(_) => "hingeexp",
        }
    }
}

fn prefix_result(
    scores: Vec<f64>,
    rejected: Vec<bool>,
    prefix: usize,
    alpha: f64,
    method: &str,
) -> DecisionResult {
    DecisionResult::from_rejections(scores, rejected, prefix as f64, alpha, method)
}

/// Rejects the first `k̃ = max{j : (1/j)Σᵢ≤ⱼ h̃(pᵢ) ≤ α}` hypotheses.
/// Scores are the `h̃` values.
pub fn accumulation_test(
    pvalues: &[f64],
    kind: AccumulationKind,
    alpha: f64,
) -> Result<DecisionResult, BaselineError> {
    kind.validate()?;
    let scores: Vec<f64> = pvalues.iter().map(|&p| kind.h(p)).collect();
    let mut running = 0.0;
    let mut k_tilde = 0;
    for (j, &s) in scores.iter().enumerate() {
        running += s;
        if running <= alpha * (j + 1) as f64 {
            k_tilde = j + 1;
        }
    }
    let rejected = (0..scores.len()).map(|i| i < k_tilde).collect();
    Ok(prefix_result(scores, rejected, k_tilde, alpha, kind.id()))
}

/// `k̂ = max{k : [s/(1−lam)]·(1 + #{i≤k: pᵢ > lam}) / (1 ∨ #{i≤k: pᵢ ≤ s}) ≤ α}`;
/// rejects `{i ≤ k̂ : pᵢ ≤ s}`. Scores are the p-values.
pub fn adaptive_seqstep(
    pvalues: &[f64],
    alpha: f64,
    s: f64,
    lam: f64,
) -> Result<DecisionResult, BaselineError> {
    unit_open("s", s)?;
    unit_open("lam", lam)?;
    if s > lam {
        return Err(BaselineError::SAboveLam { s, lam });
    }
    let factor = s / (1.0 - lam);
    let (mut above, mut below) = (0usize, 0usize);
    let mut k_hat = 0;
    for (k, &p) in pvalues.iter().enumerate() {
        if p > lam {
            above += 1;
        }
        if p <= s {
            below += 1;
        }
        if factor * (1 + above) as f64 <= alpha * below.max(1) as f64 {
            k_hat = k + 1;
        }
    }
    let rejected = pvalues
        .iter()
        .enumerate()
        .map(|(i, &p)| i < k_hat && p <= s)
        .collect();
    Ok(prefix_result(
        pvalues.to_vec(),
        rejected,
        k_hat,
        alpha,
        "adaptive-seqstep",
    ))
}

/// Adaptive SeqStep with `s = lam = alpha`.
pub fn adaptive_seqstep_default(
    pvalues: &[f64],
    alpha: f64,
) -> Result<DecisionResult, BaselineError> {
    adaptive_seqstep(pvalues, alpha, alpha, alpha)
}

/// Ordered SABHA: null-proportion weights `q̂` from the nondecreasing
/// isotonic fit of `1{pᵢ > tau}/(1 − tau)`, clipped to `[SABHA_FLOOR, 1]`,
/// then BH on `q̂ᵢpᵢ`. Scores are the weighted p-values.
pub fn sabha_ordered(
    pvalues: &[f64],
    tau: f64,
    alpha: f64,
) -> Result<DecisionResult, BaselineError> {
    unit_open("tau", tau)?;
    if pvalues.is_empty() {
        return Ok(bh(pvalues, alpha).with_method("sabha"));
    }
    let censored: Vec<f64> = pvalues
        .iter()
        .map(|&p| if p > tau { 1.0 / (1.0 - tau) } else { 0.0 })
        .collect();
    let weights = q_hat(&censored);
    let scores = pvalues.iter().zip(&weights).map(|(&p, &q)| q * p).collect();
    Ok(bh_at_level(scores, alpha, alpha, "sabha"))
}

fn q_hat(censored: &[f64]) -> Vec<f64> {
    let ones = vec![1.0; censored.len()];
    pava(censored, &ones)
        .expect("finite censoring indicators with unit weights")
        .fitted
        .into_iter()
        .map(|q| q.clamp(SABHA_FLOOR, 1.0))
        .collect()
}
