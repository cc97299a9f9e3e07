//! Local FDR scores, the Lfdr step-up rule, and asymptotic power.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::density::Density;
use crate::mixture::MixtureFit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LfdrError {
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("null probability table is empty")]
    EmptyTable,
    #[error("effect size must be positive and finite, got {0}")]
    BadEffect(f64),
}

/// Outcome of a multiple testing procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionResult {
    /// Per-hypothesis score the rule thresholds (Lfdr, p-value, …).
    pub scores: Vec<f64>,
    pub rejected: Vec<bool>,
    /// Score cutoff; 0 when nothing is rejected.
    pub threshold: f64,
    /// Number of rejections.
    pub k_hat: usize,
    pub alpha: f64,
    pub method: String,
}

impl DecisionResult {
    pub fn from_rejections(
        scores: Vec<f64>,
        rejected: Vec<bool>,
        threshold: f64,
        alpha: f64,
        method: &str,
    ) -> Self {
        let k_hat = rejected.iter().filter(|&&r| r).count();
        DecisionResult {
            scores,
            rejected,
            threshold,
            k_hat,
            alpha,
            method: method.to_string(),
        }
    }

    pub(crate) fn with_method(mut self, method: &str) -> Self {
        self.method = method.to_string();
        self
    }
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), LfdrError> {
    if got != expected {
        return Err(LfdrError::LengthMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}

/// `Lfdrᵢ = πᵢf₀(xᵢ) / (πᵢf₀(xᵢ) + (1−πᵢ)f₁(xᵢ))`, clipped to `[0, 1]`.
pub fn lfdr_values(
    pvalues: &[f64],
    pi0: &[f64],
    f1: &dyn Density,
    f0: &dyn Density,
) -> Result<Vec<f64>, LfdrError> {
    refined_lfdr(pvalues, pi0, pi0, |_, x| f1.eval(x), f0)
}

/// `Lfdrᵢ = π̆ᵢf₀(xᵢ) / f̂ⁱ(xᵢ)` where the marginal `f̂ⁱ = π̂ᵢf₀ + (1−π̂ᵢ)f̂₁`
/// uses the fitted `pi0_fit` and the numerator uses the calibrated
/// `pi0_numerator`. Clipped to `[0, 1]`.
pub fn refined_lfdr(
    pvalues: &[f64],
    pi0_numerator: &[f64],
    pi0_fit: &[f64],
    f1: impl Fn(usize, f64) -> f64,
    f0: &dyn Density,
) -> Result<Vec<f64>, LfdrError> {
    check_len("pi0", pi0_numerator.len(), pvalues.len())?;
    check_len("pi0", pi0_fit.len(), pvalues.len())?;
    Ok(pvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let null = f0.eval(x);
            let marginal = pi0_fit[i] * null + (1.0 - pi0_fit[i]) * f1(i, x);
            let num = pi0_numerator[i] * null;
            if marginal > 0.0 {
                (num / marginal).clamp(0.0, 1.0)
            } else {
                1.0
            }
        })
        .collect())
}

/// Which null probabilities enter the Lfdr estimate from a mixture fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LfdrForm {
    /// Calibrated `π̆` in numerator and marginal, as in [`lfdr_values`].
    #[default]
    Calibrated,
    /// Calibrated `π̆` over the fitted marginal `π̂f₀ + (1−π̂)f̂₁`, as in
    /// [`refined_lfdr`].
    Refined,
}

/// Lfdr estimates from a fitted mixture, honoring per-bin alternative
/// densities.
pub fn mixture_lfdr(
    fit: &MixtureFit,
    pvalues: &[f64],
    f0: &dyn Density,
    form: LfdrForm,
) -> Result<Vec<f64>, LfdrError> {
    let marginal_pi = match form {
        LfdrForm::Calibrated => &fit.pi0_calibrated,
        LfdrForm::Refined => &fit.pi0,
    };
    refined_lfdr(
        pvalues,
        &fit.pi0_calibrated,
        marginal_pi,
        |i, x| fit.f1_at(i).eval(x),
        f0,
    )
}

fn ascending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// One entry per run of tied scores, ascending:
/// `(score, Σ scores ≤ score, #{scores ≤ score})`.
fn tie_runs(scores: &[f64]) -> Vec<(f64, f64, usize)> {
    let order = ascending_order(scores);
    let mut runs = Vec::new();
    let mut total = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        total += scores[i];
        let run_ends = order
            .get(pos + 1)
            .is_none_or(|&next| scores[next] != scores[i]);
        if run_ends {
            runs.push((scores[i], total, pos + 1));
        }
    }
    runs
}

fn within_level(total: f64, count: usize, alpha: f64) -> bool {
    total <= alpha * count as f64
}

/// Step-up on sorted scores: the largest `k` whose running mean of the `k`
/// smallest scores is at most `alpha`, evaluated at the end of each run of
/// tied scores so that all hypotheses sharing the cutoff score are rejected
/// together.
pub fn step_up(scores: &[f64], alpha: f64) -> DecisionResult {
    let threshold = threshold_lambda(scores, alpha);
    let any = tie_runs(scores)
        .iter()
        .any(|&(_, total, count)| within_level(total, count, alpha));
    let rejected = scores.iter().map(|&s| any && s <= threshold).collect();
    DecisionResult::from_rejections(scores.to_vec(), rejected, threshold, alpha, "lfdr-step-up")
}

/// `FDR̂(λ) = Σ sᵢ1{sᵢ≤λ} / #{sᵢ≤λ}` at every distinct score, ascending.
pub fn estimated_fdr_curve(scores: &[f64]) -> Vec<(f64, f64)> {
    tie_runs(scores)
        .into_iter()
        .map(|(score, total, count)| (score, total / count as f64))
        .collect()
}

/// `λ̂ = sup{λ : FDR̂(λ) ≤ α}` over the observed scores; 0 when empty.
pub fn threshold_lambda(scores: &[f64], alpha: f64) -> f64 {
    tie_runs(scores)
        .into_iter()
        .filter(|&(_, total, count)| within_level(total, count, alpha))
        .map(|(score, _, _)| score)
        .fold(0.0, f64::max)
}

const POWER_GRID: usize = 2000;
const LAMBDA_SCAN: usize = 1000;

/// One-sided Gaussian alternative: `p = 1 − Φ(z)`, `z ~ N(effect, 1)`,
/// uniform null. The Lfdr rule at level `λ` rejects hypothesis position `x`
/// when `f₁(p) ≥ w(λ, x) = π₀(x)(1−λ)/((1−π₀(x))λ)`, i.e. when
/// `p ≤ g(w) = Φ(−ln w/effect − effect/2)`; under the alternative that event
/// has probability `F₁(g(w)) = Φ(effect/2 − ln w/effect)`.
struct GaussianRule {
    effect: f64,
    normal: Normal,
}

impl GaussianRule {
    /// `(null rejection probability, alternative rejection probability)`.
    fn rejection_probs(&self, pi0: f64, lambda: f64) -> (f64, f64) {
        if pi0 >= 1.0 || lambda <= 0.0 {
            return (0.0, 0.0);
        }
        if pi0 <= 0.0 || lambda >= 1.0 {
            return (1.0, 1.0);
        }
        let ln_w = pi0.ln() + (1.0 - lambda).ln() - (1.0 - pi0).ln() - lambda.ln();
        let a = ln_w / self.effect;
        let half = self.effect / 2.0;
        (self.normal.cdf(-a - half), self.normal.cdf(half - a))
    }
}

fn trapezoid(values: &[f64]) -> f64 {
    let h = 1.0 / (values.len() - 1) as f64;
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Linear interpolation of a table given on the uniform grid `j/(n−1)`.
fn interpolate(table: &[f64], x: f64) -> f64 {
    if table.len() == 1 {
        return table[0];
    }
    let pos = x.clamp(0.0, 1.0) * (table.len() - 1) as f64;
    let lo = (pos.floor() as usize).min(table.len() - 2);
    let t = pos - lo as f64;
    table[lo] * (1.0 - t) + table[lo + 1] * t
}

/// Limiting power of the Lfdr step-up rule, `D₂(λ₀)/(1 − κ₀)`, for a
/// null-probability function tabulated on a uniform grid of `[0, 1]` and a
/// one-sided Gaussian alternative with mean `effect`.
///
/// `κ₀ = ∫π₀`, `D₁(λ) = ∫π₀·g(w)`, `D₀(λ) = D₁(λ) + D₂(λ)`,
/// `D₂(λ) = ∫(1−π₀)·F₁(g(w))`, `R = D₁/D₀`, and `λ₀` is the largest `λ` with
/// `R(λ) ≤ α`, found by a descending scan followed by bisection.
pub fn asymptotic_power_gaussian(
    pi0_table: &[f64],
    effect: f64,
    alpha: f64,
) -> Result<f64, LfdrError> {
    if pi0_table.is_empty() {
        return Err(LfdrError::EmptyTable);
    }
    if !(effect > 0.0 && effect.is_finite()) {
        return Err(LfdrError::BadEffect(effect));
    }
    let rule = GaussianRule {
        effect,
        normal: Normal::standard(),
    };
    let grid: Vec<f64> = (0..POWER_GRID)
        .map(|j| interpolate(pi0_table, j as f64 / (POWER_GRID - 1) as f64))
        .collect();
    let kappa0 = trapezoid(&grid);
    if kappa0 >= 1.0 {
        return Ok(0.0);
    }

    let components = |lambda: f64| -> (f64, f64) {
        let mut d1 = Vec::with_capacity(POWER_GRID);
        let mut d2 = Vec::with_capacity(POWER_GRID);
        for &pi in &grid {
            let (null, alt) = rule.rejection_probs(pi, lambda);
            d1.push(pi * null);
            d2.push((1.0 - pi) * alt);
        }
        (trapezoid(&d1), trapezoid(&d2))
    };
    let ratio = |lambda: f64| -> f64 {
        let (d1, d2) = components(lambda);
        let d0 = d1 + d2;
        if d0 > 0.0 {
            d1 / d0
        } else {
            0.0
        }
    };

    // Candidate λ values, descending: a linear grid, then a geometric tail
    // toward 0 where R vanishes.
    let mut candidates: Vec<f64> = (1..=LAMBDA_SCAN)
        .rev()
        .map(|k| k as f64 / LAMBDA_SCAN as f64)
        .collect();
    let mut tail = 1.0 / LAMBDA_SCAN as f64;
    while tail > 1e-12 {
        tail *= 0.5;
        candidates.push(tail);
    }

    let Some(pos) = candidates.iter().position(|&l| ratio(l) <= alpha) else {
        return Ok(0.0);
    };
    let lambda0 = if pos == 0 {
        1.0
    } else {
        let (mut lo, mut hi) = (candidates[pos], candidates[pos - 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) <= alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let (_, d2) = components(lambda0);
    Ok((d2 / (1.0 - kappa0)).clamp(0.0, 1.0))
}
