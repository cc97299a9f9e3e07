//! Covariate-ordered false discovery rate control.
//!
//! Hypotheses arrive ranked by prior plausibility of being an alternative.
//! An EM algorithm with isotonic M-steps estimates a nondecreasing sequence
//! of null probabilities together with a nonincreasing alternative p-value
//! density; the resulting local FDR values feed a step-up rule.

pub mod baselines;
pub mod data;
pub mod density;
pub mod isotonic;
pub mod lfdr;
pub mod mixture;
pub mod procedure;
pub mod simulate;

pub use data::{CovariateDirection, TestData};
pub use density::{Density, StepDensity, Uniform};
pub use isotonic::{Direction, IsotonicFit};
pub use lfdr::DecisionResult;
pub use mixture::{EmOptions, MixtureFit};
pub use procedure::{run_method, Analysis, Method, MethodOptions};
