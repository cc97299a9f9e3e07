//! Weighted Grenander estimator: the `f₁` M-step.
//!
//! Maximizes `Σ wᵢ log f(xᵢ)` over nonincreasing densities on `[0, 1]`, with
//! `wᵢ = 1 − Qᵢ`. On the sorted distinct support `x₍₁₎ < … < x₍ₙ₎` the
//! optimum is constant on each `(x₍ₖ₋₁₎, x₍ₖ₎]`: fit the nonincreasing
//! isotonic regression of `uₖ = −W·Δₖ/Wₖ` with weights `Wₖ` (`W = ΣWₖ`,
//! `Δₖ = x₍ₖ₎ − x₍ₖ₋₁₎`, `x₍₀₎ = 0`) and take heights `−1/ûₖ`.

use super::MixtureError;
use crate::density::StepDensity;
use crate::isotonic::pava_decreasing;

/// Sorted distinct support of a fixed set of p-values, reused across EM
/// iterations so the sort happens once.
#[derive(Debug, Clone)]
pub(crate) struct SortedSupport {
    /// Observation indices in stable ascending p-value order.
    order: Vec<usize>,
    /// Distinct-value slot of each entry of `order`.
    slot_of_sorted: Vec<usize>,
    /// Distinct sorted support points.
    support: Vec<f64>,
    /// `support[k] − support[k−1]`, with an implicit 0 before the first.
    spacing: Vec<f64>,
}

impl SortedSupport {
    pub(crate) fn new(pvalues: &[f64]) -> Result<Self, MixtureError> {
        for (index, &value) in pvalues.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(MixtureError::BadPvalue { index, value });
            }
        }
        let mut order: Vec<usize> = (0..pvalues.len()).collect();
        order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));

        let mut support: Vec<f64> = Vec::new();
        let mut slot_of_sorted = Vec::with_capacity(order.len());
        for &i in &order {
            let x = pvalues[i];
            if support.last() != Some(&x) {
                support.push(x);
            }
            slot_of_sorted.push(support.len() - 1);
        }
        if support.len() < 2 {
            return Err(MixtureError::Degenerate(
                "fewer than two distinct p-values; no intervals to fit",
            ));
        }
        let mut spacing = Vec::with_capacity(support.len());
        let mut prev = 0.0;
        for &x in &support {
            spacing.push(x - prev);
            prev = x;
        }
        Ok(SortedSupport {
            order,
            slot_of_sorted,
            support,
            spacing,
        })
    }

    /// Fits with observation weights `weights[i] > 0` (caller's indexing).
    pub(crate) fn fit_weights(&self, weights: &[f64]) -> Result<StepDensity, MixtureError> {
        if weights.len() != self.order.len() {
            return Err(MixtureError::LengthMismatch {
                what: "weights",
                got: weights.len(),
                expected: self.order.len(),
            });
        }
        // Tied p-values collapse into one interval carrying the summed weight.
        let mut slot_weight = vec![0.0; self.support.len()];
        for (&i, &slot) in self.order.iter().zip(&self.slot_of_sorted) {
            slot_weight[slot] += weights[i];
        }
        let total: f64 = slot_weight.iter().sum();
        let targets: Vec<f64> = self
            .spacing
            .iter()
            .zip(&slot_weight)
            .map(|(&dx, &w)| -total * dx / w)
            .collect();
        let fit = pava_decreasing(&targets, &slot_weight)?;

        let mut breakpoints = Vec::with_capacity(fit.blocks.len());
        let mut heights = Vec::with_capacity(fit.blocks.len());
        for block in &fit.blocks {
            breakpoints.push(self.support[block.end]);
            heights.push(-1.0 / block.value);
        }
        Ok(StepDensity::new(breakpoints, heights, 0.0)?)
    }

    pub(crate) fn fit_posteriors(&self, q: &[f64]) -> Result<StepDensity, MixtureError> {
        let weights: Vec<f64> = q.iter().map(|&qi| 1.0 - qi).collect();
        self.fit_weights(&weights)
    }
}

/// Weighted Grenander M-step with weights `1 − Qᵢ`.
///
/// The returned density is nonincreasing, integrates to one over
/// `(0, x₍ₘ₎]`, and is zero on `(x₍ₘ₎, 1]`.
pub fn m_step_f1(pvalues: &[f64], q: &[f64]) -> Result<StepDensity, MixtureError> {
    if q.len() != pvalues.len() {
        return Err(MixtureError::LengthMismatch {
            what: "Q",
            got: q.len(),
            expected: pvalues.len(),
        });
    }
    SortedSupport::new(pvalues)?.fit_posteriors(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density;

    #[test]
    fn equal_spacing_equal_weights_is_uniform() {
        let f = m_step_f1(&[0.25, 0.5, 0.75, 1.0], &[0.3; 4]).unwrap();
        assert_eq!(f.heights(), &[1.0]);
        assert_eq!(f.breakpoints(), &[1.0]);
        for x in [0.0, 0.1, 0.5, 0.99, 1.0] {
            assert_eq!(f.eval(x), 1.0);
        }
    }

    #[test]
    fn unconstrained_solution_when_already_decreasing() {
        // ŷᵢ = (1 − Qᵢ) / (W (xᵢ − xᵢ₋₁)) with W = 1: (0.5/0.1, 0.5/0.9).
        let f = m_step_f1(&[0.1, 1.0], &[0.5, 0.5]).unwrap();
        let h = f.heights();
        assert_eq!(h.len(), 2);
        assert!((h[0] - 5.0).abs() < 1e-12);
        assert!((h[1] - 5.0 / 9.0).abs() < 1e-12);
        assert!((f.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn increasing_raw_heights_get_pooled() {
        // Raw heights 0.5/0.5 = 1 then 0.5/0.1 = 5 violate monotonicity.
        let f = m_step_f1(&[0.5, 0.6], &[0.5, 0.5]).unwrap();
        assert_eq!(f.heights().len(), 1);
        assert!((f.heights()[0] - 1.0 / 0.6).abs() < 1e-12);
        assert_eq!(f.eval(0.7), 0.0);
    }

    #[test]
    fn weights_near_zero_push_mass_left() {
        let p = [0.01, 0.02, 0.03, 0.5, 0.7, 0.9];
        let q = [0.01, 0.01, 0.01, 1.0 - 1e-10, 1.0 - 1e-10, 1.0 - 1e-10];
        let f = m_step_f1(&p, &q).unwrap();
        assert!(f.eval(0.9) < 1e-8);
        assert!(f.cdf(0.03) > 1.0 - 1e-8);
    }

    #[test]
    fn duplicates_merge() {
        let a = m_step_f1(&[0.2, 0.2, 0.6, 1.0], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((a.integral() - 1.0).abs() < 1e-12);
        // Two tied points at 0.2 carry weight 1.0 on (0, 0.2].
        assert!((a.heights()[0] - 1.0 / (2.0 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            m_step_f1(&[0.4, 0.4, 0.4], &[0.5; 3]).unwrap_err(),
            MixtureError::Degenerate("fewer than two distinct p-values; no intervals to fit")
        );
        assert!(matches!(
            m_step_f1(&[0.0, 0.4], &[0.5; 2]),
            Err(MixtureError::BadPvalue { index: 0, .. })
        ));
        assert!(m_step_f1(&[0.1, 0.4], &[1.0, 0.5]).is_err());
    }
}
