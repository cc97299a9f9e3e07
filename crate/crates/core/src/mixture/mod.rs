//! Two-group mixture estimation with a nondecreasing null-probability
//! sequence and a nonincreasing alternative density.
//!
//! The EM loop lives in [`em`]; the weighted Grenander M-step for `f₁` in
//! [`grenander`]. Everything here is the per-step arithmetic they share.

mod em;
mod grenander;

pub use em::{
    em_fit, em_fit_binned, em_fit_known_f1, em_fit_with_null, EmOptions, KnownF1Fit, MixtureFit,
};
pub use grenander::m_step_f1;

use crate::density::{Density, DensityError};
use crate::isotonic::{group_ranges, grouped_pava, pava, IsotonicError};
use thiserror::Error;

/// Bounds for the null probabilities: `π ∈ [PI_EPS, 1 − PI_EPS]`.
pub const PI_EPS: f64 = 1e-5;
/// Bounds for the E-step posteriors: `Q ∈ [Q_EPS, 1 − Q_EPS]`.
pub const Q_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error(transparent)]
    Isotonic(#[from] IsotonicError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("p-value at index {index} is outside (0, 1] ({value})")]
    BadPvalue { index: usize, value: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("need at least {min} hypotheses, got {m}")]
    TooFewHypotheses { m: usize, min: usize },
    #[error("bin of {size} hypotheses is below the minimum of {min}")]
    BinTooSmall { size: usize, min: usize },
    #[error("bin count must be at least 1")]
    NoBins,
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), MixtureError> {
    if got != expected {
        return Err(MixtureError::LengthMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn posterior_null(pi: f64, f0: f64, f1: f64) -> f64 {
    let null = pi * f0;
    let denom = null + (1.0 - pi) * f1;
    let q = if denom > 0.0 { null / denom } else { 1.0 };
    q.clamp(Q_EPS, 1.0 - Q_EPS)
}

/// Posterior null probabilities `Qᵢ = πᵢf₀(xᵢ) / (πᵢf₀(xᵢ) + (1−πᵢ)f₁(xᵢ))`.
pub fn e_step(
    pvalues: &[f64],
    pi0: &[f64],
    f1: &dyn Density,
    f0: &dyn Density,
) -> Result<Vec<f64>, MixtureError> {
    check_len("pi0", pi0.len(), pvalues.len())?;
    Ok(pvalues
        .iter()
        .zip(pi0)
        .map(|(&x, &pi)| posterior_null(pi, f0.eval(x), f1.eval(x)))
        .collect())
}

/// Nondecreasing least-squares fit of `Q`, clipped to `[PI_EPS, 1 − PI_EPS]`.
pub fn m_step_pi(q: &[f64]) -> Result<Vec<f64>, MixtureError> {
    let weights = vec![1.0; q.len()];
    let mut pi = pava(q, &weights)?.fitted;
    clip_pi(&mut pi);
    Ok(pi)
}

/// Grouped variant: one null probability per contiguous group, nondecreasing
/// across groups, expanded back to one entry per hypothesis.
pub fn m_step_pi_grouped(
    q: &[f64],
    group_of: &[usize],
    num_groups: usize,
) -> Result<Vec<f64>, MixtureError> {
    let levels = grouped_pava(q, group_of, num_groups)?;
    let ranges = group_ranges(group_of, num_groups)?;
    let mut pi = vec![0.0; q.len()];
    for (range, level) in ranges.into_iter().zip(levels) {
        pi[range].fill(level);
    }
    clip_pi(&mut pi);
    Ok(pi)
}

fn clip_pi(pi: &mut [f64]) {
    for p in pi {
        *p = p.clamp(PI_EPS, 1.0 - PI_EPS);
    }
}

/// `l(Π) = Σ log{πᵢf₀(xᵢ) + (1−πᵢ)f₁(xᵢ)}`.
pub fn log_likelihood(
    pvalues: &[f64],
    pi0: &[f64],
    f1: &dyn Density,
    f0: &dyn Density,
) -> Result<f64, MixtureError> {
    check_len("pi0", pi0.len(), pvalues.len())?;
    Ok(pvalues
        .iter()
        .zip(pi0)
        .map(|(&x, &pi)| (pi * f0.eval(x) + (1.0 - pi) * f1.eval(x)).ln())
        .sum())
}

/// The λ grid for [`storey_pi0`].
pub const STOREY_LAMBDAS: [f64; 2] = [0.5, 0.8];

/// Global null proportion: the larger of the Storey estimates
/// `min(1, #{p > λ} / (m(1 − λ)))` over [`STOREY_LAMBDAS`].
pub fn storey_pi0(pvalues: &[f64]) -> f64 {
    if pvalues.is_empty() {
        return 1.0;
    }
    let m = pvalues.len() as f64;
    STOREY_LAMBDAS
        .iter()
        .map(|&lambda| {
            let above = pvalues.iter().filter(|&&p| p > lambda).count() as f64;
            (above / (m * (1.0 - lambda))).min(1.0)
        })
        .fold(0.0, f64::max)
}

/// Raises `pi0` toward 1 when its mean falls short of the global estimate:
/// `πᵢ + δ(1 − πᵢ)` with `δ = (π̂ − π̃)/(1 − π̃)`, `π̃ = mean(pi0)`.
pub fn calibrate_pi0(pi0: &[f64], pi_global: f64) -> Vec<f64> {
    if pi0.is_empty() {
        return Vec::new();
    }
    let mean = pi0.iter().sum::<f64>() / pi0.len() as f64;
    if mean >= pi_global || mean >= 1.0 {
        return pi0.to_vec();
    }
    let delta = (pi_global - mean) / (1.0 - mean);
    pi0.iter()
        .map(|&p| (p + delta * (1.0 - p)).min(1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{StepDensity, Uniform};
    use crate::isotonic::{maxmin_oracle, Direction};

    #[test]
    fn e_step_examples() {
        let flat = |_x: f64| 1.0;
        let q = e_step(&[0.3], &[0.5], &flat, &Uniform).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15);

        let four = |_x: f64| 4.0;
        let q = e_step(&[0.3], &[0.8], &four, &Uniform).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15);

        let zero = |_x: f64| 0.0;
        let q = e_step(&[0.3], &[0.5], &zero, &Uniform).unwrap();
        assert_eq!(q[0], 1.0 - Q_EPS);
    }

    #[test]
    fn m_step_pi_examples() {
        let pi = m_step_pi(&[0.9, 0.5, 0.1]).unwrap();
        for p in &pi {
            assert!((p - 0.5).abs() < 1e-15);
        }
        assert_eq!(m_step_pi(&[0.1, 0.5, 0.9]).unwrap(), vec![0.1, 0.5, 0.9]);

        let q = [0.3, 0.1, 0.2, 0.8];
        let oracle = maxmin_oracle(&q, &[1.0; 4], Direction::NonDecreasing).unwrap();
        let pi = m_step_pi(&q).unwrap();
        for (a, b) in pi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((pi[0] - 0.2).abs() < 1e-15 && (pi[3] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn m_step_pi_clips() {
        let pi = m_step_pi(&[0.0, 1.0]).unwrap();
        assert_eq!(pi, vec![PI_EPS, 1.0 - PI_EPS]);
    }

    #[test]
    fn grouped_m_step_expands_levels() {
        let pi = m_step_pi_grouped(&[0.2, 0.4, 0.1, 0.3], &[0, 0, 1, 1], 2).unwrap();
        for p in &pi {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let pi = m_step_pi_grouped(&[0.1, 0.1, 0.9, 0.9, 0.9], &[0, 0, 1, 1, 1], 2).unwrap();
        assert!((pi[0] - 0.1).abs() < 1e-15 && (pi[4] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn storey_examples() {
        assert_eq!(storey_pi0(&[0.1, 0.2, 0.6, 0.8]), 1.0);
        assert_eq!(storey_pi0(&[0.1, 0.2, 0.3, 0.49]), 0.0);
        // λ = 0.5: 1/(4·0.5) = 0.5; λ = 0.8: 1/(4·0.2) = 1.25 → capped at 1.
        assert_eq!(storey_pi0(&[0.1, 0.2, 0.3, 0.9]), 1.0);
        // λ = 0.5: 2/(8·0.5) = 0.5; λ = 0.8: 0.
        assert_eq!(storey_pi0(&[0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.6, 0.7]), 0.5);
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_pi0(&[0.6, 0.8], 0.7), vec![0.6, 0.8]);
        assert_eq!(calibrate_pi0(&[0.6, 0.8], 0.5), vec![0.6, 0.8]);
        let c = calibrate_pi0(&[0.4, 0.6], 0.7);
        assert!((c[0] - 0.64).abs() < 1e-12 && (c[1] - 0.76).abs() < 1e-12);
        let mean: f64 = (0.64 + 0.76) / 2.0;
        assert!((mean - 0.7).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_examples() {
        let flat = |_x: f64| 1.0;
        let l = log_likelihood(&[0.1, 0.7, 0.9], &[0.2, 0.5, 0.9], &flat, &Uniform).unwrap();
        assert_eq!(l, 0.0);
        let f1 = StepDensity::new(vec![0.5], vec![2.0], 0.0).unwrap();
        let l = log_likelihood(&[0.5], &[0.5], &f1, &Uniform).unwrap();
        assert!((l - 1.5f64.ln()).abs() < 1e-15);
    }
}
