use std::ops::Range;

use serde::Serialize;

use super::grenander::SortedSupport;
use super::{
    calibrate_pi0, check_len, clip_pi, m_step_pi, m_step_pi_grouped, posterior_null, storey_pi0,
    MixtureError, PI_EPS,
};
use crate::data::TestData;
use crate::density::{Density, StepDensity, Uniform};

/// Smallest `m` accepted by [`em_fit`].
pub const MIN_HYPOTHESES: usize = 10;
/// Smallest bin accepted by [`em_fit_binned`] when `K > 1`.
pub const MIN_BIN_SIZE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct EmOptions {
    /// Stop once `|Δl| / (|l| + 1)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Contiguous group id per hypothesis (prior order) for the grouped
    /// extension; `None` estimates one null probability per hypothesis.
    pub groups: Option<Vec<usize>>,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            tol: 1e-6,
            max_iter: 200,
            groups: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureFit {
    /// Nondecreasing null probabilities in prior order.
    pub pi0: Vec<f64>,
    /// `pi0` after calibration against the global Storey estimate.
    pub pi0_calibrated: Vec<f64>,
    /// Global null proportion used for calibration.
    pub pi_global: f64,
    /// One alternative density per bin; a single entry unless binned.
    pub f1: Vec<StepDensity>,
    /// First prior-order index of each bin.
    pub bin_starts: Vec<usize>,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MixtureFit {
    /// The alternative density governing hypothesis `i`.
    pub fn f1_at(&self, i: usize) -> &StepDensity {
        let bin = self.bin_starts.partition_point(|&s| s <= i) - 1;
        &self.f1[bin]
    }

    pub fn bins(&self) -> Vec<Range<usize>> {
        let m = self.pi0.len();
        self.bin_starts
            .iter()
            .enumerate()
            .map(|(k, &s)| s..self.bin_starts.get(k + 1).copied().unwrap_or(m))
            .collect()
    }

    pub fn final_loglik(&self) -> f64 {
        *self.loglik_trace.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownF1Fit {
    pub pi0: Vec<f64>,
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn split_bins(m: usize, bins: usize) -> Vec<Range<usize>> {
    (0..bins)
        .map(|k| (k * m / bins)..((k + 1) * m / bins))
        .collect()
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / (prev.abs() + 1.0)
}

fn loglik_from_values(pi: &[f64], f0: &[f64], f1: &[f64]) -> f64 {
    pi.iter()
        .zip(f0)
        .zip(f1)
        .map(|((&p, &a), &b)| (p * a + (1.0 - p) * b).ln())
        .sum()
}

struct PiStep<'a> {
    groups: Option<(&'a [usize], usize)>,
}

impl<'a> PiStep<'a> {
    fn new(groups: Option<&'a [usize]>, m: usize) -> Result<Self, MixtureError> {
        match groups {
            None => Ok(PiStep { groups: None }),
            Some(g) => {
                check_len("groups", g.len(), m)?;
                let num_groups = g.iter().max().map_or(0, |&x| x + 1);
                crate::isotonic::group_ranges(g, num_groups)?;
                Ok(PiStep {
                    groups: Some((g, num_groups)),
                })
            }
        }
    }

    fn apply(&self, q: &[f64]) -> Result<Vec<f64>, MixtureError> {
        match self.groups {
            None => m_step_pi(q),
            Some((g, d)) => m_step_pi_grouped(q, g, d),
        }
    }
}

fn initial_pi(pvalues: &[f64]) -> Vec<f64> {
    let mut pi = vec![storey_pi0(pvalues); pvalues.len()];
    clip_pi(&mut pi);
    pi
}

fn fit_with_bins(
    data: &TestData,
    bins: usize,
    opts: &EmOptions,
    f0: &dyn Density,
) -> Result<MixtureFit, MixtureError> {
    let x = data.pvalues();
    let m = x.len();
    if m < MIN_HYPOTHESES {
        return Err(MixtureError::TooFewHypotheses {
            m,
            min: MIN_HYPOTHESES,
        });
    }
    if bins == 0 {
        return Err(MixtureError::NoBins);
    }
    let ranges = split_bins(m, bins);
    if bins > 1 {
        let smallest = ranges.iter().map(|r| r.len()).min().unwrap();
        if smallest < MIN_BIN_SIZE {
            return Err(MixtureError::BinTooSmall {
                size: smallest,
                min: MIN_BIN_SIZE,
            });
        }
    }
    let supports = ranges
        .iter()
        .map(|r| SortedSupport::new(&x[r.clone()]))
        .collect::<Result<Vec<_>, _>>()?;
    let pi_step = PiStep::new(opts.groups.as_deref(), m)?;
    let f0_vals: Vec<f64> = x.iter().map(|&xi| f0.eval(xi)).collect();

    let eval_f1 = |densities: &[StepDensity], out: &mut Vec<f64>| {
        out.clear();
        for (r, d) in ranges.iter().zip(densities) {
            out.extend(x[r.clone()].iter().map(|&xi| d.eval(xi)));
        }
    };

    let mut pi = initial_pi(x);
    let mut f1 = ranges
        .iter()
        .zip(&supports)
        .map(|(r, s)| s.fit_weights(&vec![1.0; r.len()]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut f1_vals = Vec::with_capacity(m);
    eval_f1(&f1, &mut f1_vals);

    let mut trace = vec![loglik_from_values(&pi, &f0_vals, &f1_vals)];
    let mut q = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        for i in 0..m {
            q[i] = posterior_null(pi[i], f0_vals[i], f1_vals[i]);
        }
        pi = pi_step.apply(&q)?;
        f1 = ranges
            .iter()
            .zip(&supports)
            .map(|(r, s)| s.fit_posteriors(&q[r.clone()]))
            .collect::<Result<Vec<_>, _>>()?;
        eval_f1(&f1, &mut f1_vals);
        iterations += 1;

        let l = loglik_from_values(&pi, &f0_vals, &f1_vals);
        let prev = *trace.last().unwrap();
        trace.push(l);
        if relative_change(prev, l) < opts.tol {
            converged = true;
            break;
        }
    }

    let pi_global = storey_pi0(x);
    Ok(MixtureFit {
        pi0_calibrated: calibrate_pi0(&pi, pi_global),
        pi0: pi,
        pi_global,
        f1,
        bin_starts: ranges.iter().map(|r| r.start).collect(),
        loglik_trace: trace,
        iterations,
        converged,
    })
}

/// EM with a uniform null density.
pub fn em_fit(data: &TestData, opts: &EmOptions) -> Result<MixtureFit, MixtureError> {
    fit_with_bins(data, 1, opts, &Uniform)
}

/// EM with a caller-supplied null density.
pub fn em_fit_with_null(
    data: &TestData,
    opts: &EmOptions,
    f0: &dyn Density,
) -> Result<MixtureFit, MixtureError> {
    fit_with_bins(data, 1, opts, f0)
}

/// EM with a separate alternative density for each of `bins` contiguous
/// index bins. `bins == 1` is exactly [`em_fit`].
pub fn em_fit_binned(
    data: &TestData,
    bins: usize,
    opts: &EmOptions,
) -> Result<MixtureFit, MixtureError> {
    fit_with_bins(data, bins, opts, &Uniform)
}

/// EM for the null probabilities alone, `f₁` held fixed.
pub fn em_fit_known_f1(
    data: &TestData,
    f1: &dyn Density,
    f0: &dyn Density,
    opts: &EmOptions,
) -> Result<KnownF1Fit, MixtureError> {
    let x = data.pvalues();
    let m = x.len();
    let pi_step = PiStep::new(opts.groups.as_deref(), m)?;
    let f0_vals: Vec<f64> = x.iter().map(|&xi| f0.eval(xi)).collect();
    let f1_vals: Vec<f64> = x.iter().map(|&xi| f1.eval(xi)).collect();

    let mut pi = initial_pi(x);
    let mut trace = vec![loglik_from_values(&pi, &f0_vals, &f1_vals)];
    let mut q = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        for i in 0..m {
            q[i] = posterior_null(pi[i], f0_vals[i], f1_vals[i]);
        }
        pi = pi_step.apply(&q)?;
        iterations += 1;
        let l = loglik_from_values(&pi, &f0_vals, &f1_vals);
        let prev = *trace.last().unwrap();
        trace.push(l);
        if relative_change(prev, l) < opts.tol {
            converged = true;
            break;
        }
    }
    debug_assert!(pi.iter().all(|&p| p >= PI_EPS));
    Ok(KnownF1Fit {
        pi0: pi,
        loglik_trace: trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(m: usize) -> TestData {
        // Deterministic, irregular, with small p-values early in the order.
        let p: Vec<f64> = (0..m)
            .map(|i| {
                let u = ((i as f64 * 0.618_033_988_75).fract() * 0.98) + 0.01;
                if i < m / 4 {
                    u * u * u * 0.1
                } else {
                    u
                }
            })
            .collect();
        TestData::ordered(&p).unwrap()
    }

    #[test]
    fn fit_is_monotone_and_ascends() {
        let fit = em_fit(&toy(400), &EmOptions::default()).unwrap();
        assert!(fit.pi0.windows(2).all(|w| w[0] <= w[1]));
        assert!(fit.pi0_calibrated.windows(2).all(|w| w[0] <= w[1]));
        for (a, b) in fit.pi0.iter().zip(&fit.pi0_calibrated) {
            assert!(b >= a);
        }
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{} then {}", w[0], w[1]);
        }
        assert_eq!(fit.loglik_trace.len(), fit.iterations + 1);
        assert!(fit.pi0[0] < fit.pi0[399]);
    }

    #[test]
    fn deterministic() {
        let d = toy(300);
        let a = em_fit(&d, &EmOptions::default()).unwrap();
        let b = em_fit(&d, &EmOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_bin_matches_plain_fit() {
        let d = toy(300);
        let a = em_fit(&d, &EmOptions::default()).unwrap();
        let b = em_fit_binned(&d, 1, &EmOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bin_guard() {
        let d = toy(100);
        assert_eq!(
            em_fit_binned(&d, 50, &EmOptions::default()).unwrap_err(),
            MixtureError::BinTooSmall { size: 2, min: 50 }
        );
        assert_eq!(
            em_fit_binned(&d, 0, &EmOptions::default()).unwrap_err(),
            MixtureError::NoBins
        );
        let fit = em_fit_binned(&toy(200), 2, &EmOptions::default()).unwrap();
        assert_eq!(fit.bin_starts, vec![0, 100]);
        assert!(std::ptr::eq(fit.f1_at(150), &fit.f1[1]));
        assert!(std::ptr::eq(fit.f1_at(99), &fit.f1[0]));
    }

    #[test]
    fn too_small_and_degenerate() {
        let d = TestData::ordered(&[0.5; 5]).unwrap();
        assert!(matches!(
            em_fit(&d, &EmOptions::default()),
            Err(MixtureError::TooFewHypotheses { m: 5, .. })
        ));
        let d = TestData::ordered(&[0.5; 20]).unwrap();
        assert!(matches!(
            em_fit(&d, &EmOptions::default()),
            Err(MixtureError::Degenerate(_))
        ));
    }

    #[test]
    fn grouped_fit_is_constant_within_groups() {
        let d = toy(200);
        let groups: Vec<usize> = (0..200).map(|i| i / 50).collect();
        let opts = EmOptions {
            groups: Some(groups),
            ..EmOptions::default()
        };
        let fit = em_fit(&d, &opts).unwrap();
        for g in 0..4 {
            let block = &fit.pi0[g * 50..(g + 1) * 50];
            assert!(block.iter().all(|&p| p == block[0]));
        }
        assert!(fit.pi0.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn known_f1_equal_to_null_is_a_fixed_point() {
        let d = toy(100);
        let fit = em_fit_known_f1(&d, &Uniform, &Uniform, &EmOptions::default()).unwrap();
        let start = storey_pi0(d.pvalues()).clamp(PI_EPS, 1.0 - PI_EPS);
        for &p in &fit.pi0 {
            assert!((p - start).abs() < 1e-12);
        }
        assert!(fit.converged);
    }

    #[test]
    fn known_f1_single_observation_hits_boundary() {
        let d = TestData::ordered(&[0.9]).unwrap();
        let four = |_x: f64| 4.0;
        let fit = em_fit_known_f1(&d, &four, &Uniform, &EmOptions::default()).unwrap();
        assert_eq!(fit.pi0, vec![PI_EPS]);
    }
}
