//! Densities on the unit interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A density evaluable on `[0, 1]`.
pub trait Density: Sync {
    fn eval(&self, x: f64) -> f64;
}

impl<F> Density for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// The uniform null density `f₀ ≡ 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Uniform;

impl Density for Uniform {
    fn eval(&self, _x: f64) -> f64 {
        1.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("breakpoints and heights differ in length ({breakpoints} vs {heights})")]
    LengthMismatch { breakpoints: usize, heights: usize },
    #[error("a step density needs at least one interval")]
    Empty,
    #[error("breakpoints must be strictly increasing within (0, 1]")]
    BadBreakpoints,
    #[error("heights must be finite, nonnegative and nonincreasing")]
    BadHeights,
    #[error("density integrates to {0}, not 1")]
    NotNormalized(f64),
}

/// Nonincreasing piecewise-constant density.
///
/// Height `heights[k]` applies on `(breakpoints[k-1], breakpoints[k]]` with an
/// implicit leading breakpoint at 0; `tail_height` covers `(b_last, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDensity {
    breakpoints: Vec<f64>,
    heights: Vec<f64>,
    tail_height: f64,
}

impl StepDensity {
    pub const NORMALIZATION_TOL: f64 = 1e-8;

    pub fn new(
        breakpoints: Vec<f64>,
        heights: Vec<f64>,
        tail_height: f64,
    ) -> Result<Self, DensityError> {
        if breakpoints.len() != heights.len() {
            return Err(DensityError::LengthMismatch {
                breakpoints: breakpoints.len(),
                heights: heights.len(),
            });
        }
        if breakpoints.is_empty() {
            return Err(DensityError::Empty);
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b <= 1.0) {
                return Err(DensityError::BadBreakpoints);
            }
            prev = b;
        }
        let mut prev = f64::INFINITY;
        for &h in heights.iter().chain(std::iter::once(&tail_height)) {
            if !(h.is_finite() && h >= 0.0 && h <= prev) {
                return Err(DensityError::BadHeights);
            }
            prev = h;
        }
        let density = StepDensity {
            breakpoints,
            heights,
            tail_height,
        };
        let total = density.integral();
        if (total - 1.0).abs() > Self::NORMALIZATION_TOL {
            return Err(DensityError::NotNormalized(total));
        }
        Ok(density)
    }

    pub fn uniform() -> Self {
        StepDensity {
            breakpoints: vec![1.0],
            heights: vec![1.0],
            tail_height: 0.0,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn tail_height(&self) -> f64 {
        self.tail_height
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn integral(&self) -> f64 {
        self.cdf(1.0)
    }

    /// `∫₀ˣ f`.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut total = 0.0;
        let mut left = 0.0;
        for (&b, &h) in self.breakpoints.iter().zip(&self.heights) {
            if x <= b {
                return total + h * (x - left);
            }
            total += h * (b - left);
            left = b;
        }
        total + self.tail_height * (x - left)
    }

    /// Intervals `(left, right, height)` including the tail when it has width.
    pub fn intervals(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.heights.len() + 1);
        let mut left = 0.0;
        for (&b, &h) in self.breakpoints.iter().zip(&self.heights) {
            out.push((left, b, h));
            left = b;
        }
        if left < 1.0 {
            out.push((left, 1.0, self.tail_height));
        }
        out
    }
}

impl Density for StepDensity {
    fn eval(&self, x: f64) -> f64 {
        if x > self.last_breakpoint() {
            return self.tail_height;
        }
        // First breakpoint ≥ x; right-continuous intervals (b_{k-1}, b_k].
        let k = self.breakpoints.partition_point(|&b| b < x);
        self.heights[k]
    }
}
