//! Weighted isotonic regression.
//!
//! [`pava`] is the linear-time pool-adjacent-violators solver used by every
//! M-step. [`maxmin_oracle`] evaluates the closed-form max–min solution
//! literally in O(n³) and exists so tests can check the two agree.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsotonicError {
    #[error("input is empty")]
    Empty,
    #[error("values and weights differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("weight at index {index} is not a positive finite number ({weight})")]
    BadWeight { index: usize, weight: f64 },
    #[error("value at index {index} is not finite ({value})")]
    BadValue { index: usize, value: f64 },
    #[error("group {group} has no members")]
    EmptyGroup { group: usize },
    #[error("group ids are not contiguous and ordered at index {index}")]
    NonContiguousGroups { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

/// A run of indices sharing one pooled value. `end` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub weight: f64,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    pub blocks: Vec<Block>,
    pub direction: Direction,
}

fn validate(values: &[f64], weights: &[f64]) -> Result<(), IsotonicError> {
    if values.len() != weights.len() {
        return Err(IsotonicError::LengthMismatch {
            values: values.len(),
            weights: weights.len(),
        });
    }
    if values.is_empty() {
        return Err(IsotonicError::Empty);
    }
    for (index, &weight) in weights.iter().enumerate() {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(IsotonicError::BadWeight { index, weight });
        }
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(IsotonicError::BadValue { index, value });
        }
    }
    Ok(())
}

struct Pool {
    start: usize,
    end: usize,
    weighted_sum: f64,
    weight: f64,
}

impl Pool {
    fn mean(&self) -> f64 {
        self.weighted_sum / self.weight
    }
}

/// Stack-based pooling. `violates(prev, cur)` decides whether the top two
/// pools must merge; returning true on equality merges ties.
fn pool_adjacent(
    values: &[f64],
    weights: &[f64],
    violates: impl Fn(f64, f64) -> bool,
) -> Vec<Block> {
    let mut stack: Vec<Pool> = Vec::with_capacity(values.len());
    for (i, (&v, &w)) in values.iter().zip(weights).enumerate() {
        stack.push(Pool {
            start: i,
            end: i,
            weighted_sum: v * w,
            weight: w,
        });
        while stack.len() >= 2 {
            let n = stack.len();
            if !violates(stack[n - 2].mean(), stack[n - 1].mean()) {
                break;
            }
            let top = stack.pop().unwrap();
            let prev = stack.last_mut().unwrap();
            prev.end = top.end;
            prev.weighted_sum += top.weighted_sum;
            prev.weight += top.weight;
        }
    }
    stack
        .into_iter()
        .map(|p| Block {
            start: p.start,
            end: p.end,
            value: p.mean(),
            weight: p.weight,
        })
        .collect()
}

fn expand(blocks: &[Block], n: usize) -> Vec<f64> {
    let mut fitted = Vec::with_capacity(n);
    for b in blocks {
        fitted.extend(std::iter::repeat_n(b.value, b.len()));
    }
    fitted
}

/// Minimizes `Σ wᵢ(vᵢ − zᵢ)²` over nondecreasing `z`.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<IsotonicFit, IsotonicError> {
    validate(values, weights)?;
    let blocks = pool_adjacent(values, weights, |prev, cur| prev >= cur);
    Ok(IsotonicFit {
        fitted: expand(&blocks, values.len()),
        blocks,
        direction: Direction::NonDecreasing,
    })
}

/// Minimizes `Σ wᵢ(vᵢ − zᵢ)²` over nonincreasing `z`.
pub fn pava_decreasing(values: &[f64], weights: &[f64]) -> Result<IsotonicFit, IsotonicError> {
    validate(values, weights)?;
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let mut blocks = pool_adjacent(&negated, weights, |prev, cur| prev >= cur);
    for b in &mut blocks {
        b.value = -b.value;
    }
    Ok(IsotonicFit {
        fitted: expand(&blocks, values.len()),
        blocks,
        direction: Direction::NonIncreasing,
    })
}

/// Literal max–min evaluation of the isotonic solution, O(n³).
///
/// Nondecreasing: `ẑᵢ = max_{a≤i} min_{b≥i} avg(a..=b)`; nonincreasing swaps
/// the roles of max and min.
pub fn maxmin_oracle(
    values: &[f64],
    weights: &[f64],
    direction: Direction,
) -> Result<Vec<f64>, IsotonicError> {
    validate(values, weights)?;
    let n = values.len();
    // Direct window sums rather than prefix differences: no cancellation.
    let avg = |a: usize, b: usize| -> f64 {
        let num: f64 = (a..=b).map(|j| values[j] * weights[j]).sum();
        let den: f64 = weights[a..=b].iter().sum();
        num / den
    };
    let fitted = (0..n)
        .map(|i| match direction {
            Direction::NonDecreasing => (0..=i)
                .map(|a| (i..n).map(|b| avg(a, b)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max),
            Direction::NonIncreasing => (0..=i)
                .map(|a| (i..n).map(|b| avg(a, b)).fold(f64::NEG_INFINITY, f64::max))
                .fold(f64::INFINITY, f64::min),
        })
        .collect();
    Ok(fitted)
}

/// Checks that `group_of` labels contiguous runs `0, 0, 1, 1, 1, 2, …` covering
/// every group in `0..num_groups`, and returns the run boundaries.
pub fn group_ranges(
    group_of: &[usize],
    num_groups: usize,
) -> Result<Vec<std::ops::Range<usize>>, IsotonicError> {
    if group_of.is_empty() || num_groups == 0 {
        return Err(IsotonicError::Empty);
    }
    let mut ranges = Vec::with_capacity(num_groups);
    let mut start = 0;
    let mut expected = 0;
    if group_of[0] != 0 {
        return Err(IsotonicError::EmptyGroup { group: 0 });
    }
    for i in 1..=group_of.len() {
        let current = group_of[i - 1];
        let next = group_of.get(i).copied();
        if next == Some(current) {
            continue;
        }
        ranges.push(start..i);
        start = i;
        expected += 1;
        if let Some(next) = next {
            if next < expected {
                return Err(IsotonicError::NonContiguousGroups { index: i });
            }
            if next > expected {
                return Err(IsotonicError::EmptyGroup { group: expected });
            }
        }
    }
    if expected < num_groups {
        return Err(IsotonicError::EmptyGroup { group: expected });
    }
    if expected > num_groups {
        return Err(IsotonicError::NonContiguousGroups {
            index: group_of.len() - 1,
        });
    }
    Ok(ranges)
}

/// Nondecreasing group-level values minimizing `Σⱼ (Qⱼ − π_{s(j)})²`:
/// PAVA on the group means weighted by group size.
pub fn grouped_pava(
    values: &[f64],
    group_of: &[usize],
    num_groups: usize,
) -> Result<Vec<f64>, IsotonicError> {
    if values.len() != group_of.len() {
        return Err(IsotonicError::LengthMismatch {
            values: values.len(),
            weights: group_of.len(),
        });
    }
    let ranges = group_ranges(group_of, num_groups)?;
    let means: Vec<f64> = ranges
        .iter()
        .map(|r| values[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    let sizes: Vec<f64> = ranges.iter().map(|r| r.len() as f64).collect();
    Ok(pava(&means, &sizes)?.fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pava_examples() {
        let fit = pava(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap();
        assert_eq!(fit.fitted, vec![1.0, 2.0, 3.0]);
        assert_eq!(fit.blocks.len(), 3);

        let fit = pava(&[3.0, 1.0, 2.0], &[1.0; 3]).unwrap();
        assert!(close(&fit.fitted, &[2.0, 2.0, 2.0], 1e-15));
        assert_eq!(fit.blocks.len(), 1);

        let fit = pava(&[1.0, 3.0, 2.0], &[1.0, 1.0, 2.0]).unwrap();
        assert!(close(&fit.fitted, &[1.0, 7.0 / 3.0, 7.0 / 3.0], 1e-15));
        assert_eq!(fit.blocks[1].start, 1);
        assert_eq!(fit.blocks[1].end, 2);
    }

    #[test]
    fn decreasing_examples() {
        assert_eq!(
            pava_decreasing(&[3.0, 2.0, 1.0], &[1.0; 3]).unwrap().fitted,
            vec![3.0, 2.0, 1.0]
        );
        // 1 < 3 violates the constraint first, then the pooled 2 ties with 2.
        let fit = pava_decreasing(&[1.0, 3.0, 2.0], &[1.0; 3]).unwrap();
        assert!(close(&fit.fitted, &[2.0, 2.0, 2.0], 1e-15));
        let oracle = maxmin_oracle(&[1.0, 3.0, 2.0], &[1.0; 3], Direction::NonIncreasing).unwrap();
        assert!(close(&fit.fitted, &oracle, 1e-15));
        let fit = pava_decreasing(&[2.0, 2.0, 2.0], &[1.0; 3]).unwrap();
        assert_eq!(fit.fitted, vec![2.0, 2.0, 2.0]);
        assert_eq!(fit.blocks.len(), 1);
    }

    #[test]
    fn oracle_examples() {
        let z = maxmin_oracle(&[3.0, 1.0, 2.0], &[1.0; 3], Direction::NonDecreasing).unwrap();
        assert!(close(&z, &[2.0, 2.0, 2.0], 1e-15));
        assert_eq!(
            maxmin_oracle(&[5.0], &[1.0], Direction::NonDecreasing).unwrap(),
            vec![5.0]
        );
        assert_eq!(
            maxmin_oracle(&[0.0, 1.0], &[2.0, 1.0], Direction::NonDecreasing).unwrap(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn ties_merge_into_one_block() {
        let fit = pava(&[1.0, 1.0, 2.0, 2.0], &[1.0; 4]).unwrap();
        assert_eq!(fit.blocks.len(), 2);
        for pair in fit.blocks.windows(2) {
            assert!(pair[0].value < pair[1].value);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(pava(&[], &[]), Err(IsotonicError::Empty));
        assert!(matches!(
            pava(&[1.0], &[1.0, 2.0]),
            Err(IsotonicError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pava(&[1.0, 2.0], &[1.0, 0.0]),
            Err(IsotonicError::BadWeight { index: 1, .. })
        ));
        assert!(matches!(
            pava(&[1.0, 2.0], &[f64::NAN, 1.0]),
            Err(IsotonicError::BadWeight { index: 0, .. })
        ));
        assert!(matches!(
            pava(&[f64::NAN, 2.0], &[1.0, 1.0]),
            Err(IsotonicError::BadValue { index: 0, .. })
        ));
    }

    #[test]
    fn grouped_examples() {
        let g = grouped_pava(&[0.2, 0.4, 0.1, 0.3], &[0, 0, 1, 1], 2).unwrap();
        assert!(close(&g, &[0.25, 0.25], 1e-15));
        let g = grouped_pava(&[0.2, 0.4, 0.1], &[0, 0, 0], 1).unwrap();
        assert!(close(&g, &[0.7 / 3.0], 1e-15));
        let g = grouped_pava(&[0.1, 0.1, 0.9, 0.9], &[0, 0, 1, 1], 2).unwrap();
        assert!(close(&g, &[0.1, 0.9], 1e-15));
    }

    #[test]
    fn grouped_rejects_bad_groups() {
        assert_eq!(
            grouped_pava(&[0.1, 0.2, 0.3], &[0, 2, 2], 3),
            Err(IsotonicError::EmptyGroup { group: 1 })
        );
        assert_eq!(
            grouped_pava(&[0.1, 0.2, 0.3], &[0, 1, 0], 2),
            Err(IsotonicError::NonContiguousGroups { index: 2 })
        );
        assert_eq!(
            grouped_pava(&[0.1, 0.2], &[0, 0], 2),
            Err(IsotonicError::EmptyGroup { group: 1 })
        );
    }
}
