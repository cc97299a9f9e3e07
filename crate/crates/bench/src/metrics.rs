//! Per-replicate error and power measurements.

use ordershape::DecisionResult;
use ordershape::Method;
use serde::Serialize;

/// `V/(R ∨ 1)` and `TP/(#alternatives ∨ 1)` for one decision against truth
/// (`true` = alternative).
pub fn fdp_and_power(decision: &DecisionResult, truth: &[bool]) -> (f64, f64) {
    assert_eq!(
        decision.rejected.len(),
        truth.len(),
        "decision and truth lengths differ"
    );
    let mut false_rej = 0usize;
    let mut true_rej = 0usize;
    for (&r, &alt) in decision.rejected.iter().zip(truth) {
        if r {
            if alt {
                true_rej += 1;
            } else {
                false_rej += 1;
            }
        }
    }
    let alternatives = truth.iter().filter(|&&a| a).count();
    let fdp = false_rej as f64 / (false_rej + true_rej).max(1) as f64;
    let power = true_rej as f64 / alternatives.max(1) as f64;
    (fdp, power)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateMetrics {
    pub method: Method,
    /// Index into the grid's scenario list.
    pub scenario: usize,
    pub rep: usize,
    pub fdp: f64,
    pub power: f64,
    pub rejections: usize,
    pub runtime_ms: f64,
}

/// Mean with a `±1.96·SE` interval; degenerate (zero-width) for one value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                se: f64::NAN,
                ci_lo: f64::NAN,
                ci_hi: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Summary {
            mean,
            se,
            ci_lo: mean - 1.96 * se,
            ci_hi: mean + 1.96 * se,
        }
    }

    /// As [`Summary::of`] with the interval clipped to `[0, 1]`.
    pub fn of_proportions(values: &[f64]) -> Self {
        let s = Self::of(values);
        Summary {
            ci_lo: s.ci_lo.max(0.0),
            ci_hi: s.ci_hi.min(1.0),
            ..s
        }
    }
}
