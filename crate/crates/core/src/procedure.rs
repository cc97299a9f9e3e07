//! Uniform entry point over every rejection procedure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, AccumulationKind, BaselineError, SABHA_TAU};
use crate::data::TestData;
use crate::density::Uniform;
use crate::lfdr::{mixture_lfdr, step_up, DecisionResult, LfdrError, LfdrForm};
use crate::mixture::{em_fit_binned, EmOptions, MixtureError, MixtureFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Isotonic EM fit followed by the Lfdr step-up rule.
    #[serde(rename = "ordershape")]
    OrderShape,
    Bh,
    /// Storey-adjusted BH.
    #[serde(rename = "st")]
    Storey,
    #[serde(rename = "forwardstop")]
    ForwardStop,
    #[serde(rename = "seqstep")]
    SeqStep,
    #[serde(rename = "hingeexp")]
    HingeExp,
    AdaptiveSeqstep,
    Sabha,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::OrderShape,
        Method::Bh,
        Method::Storey,
        Method::ForwardStop,
        Method::SeqStep,
        Method::HingeExp,
        Method::AdaptiveSeqstep,
        Method::Sabha,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Method::OrderShape => "ordershape",
            Method::Bh => "bh",
            Method::Storey => "st",
            Method::ForwardStop => "forwardstop",
            Method::SeqStep => "seqstep",
            Method::HingeExp => "hingeexp",
            Method::AdaptiveSeqstep => "adaptive-seqstep",
            Method::Sabha => "sabha",
        }
    }

    /// Whether the method reads the prior order.
    pub fn uses_order(&self) -> bool {
        !matches!(self, Method::Bh | Method::Storey)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown method {0:?}")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Tuning constants for every method; defaults follow the documented
/// single-parameter usage.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOptions {
    pub em: EmOptions,
    pub lfdr_form: LfdrForm,
    /// Contiguous bins with separate alternative densities.
    pub bins: usize,
    pub seqstep_c: f64,
    pub hingeexp_c: f64,
    /// Adaptive SeqStep `s`; `None` uses `alpha`.
    pub adaptive_s: Option<f64>,
    /// Adaptive SeqStep `lam`; `None` uses `alpha`.
    pub adaptive_lam: Option<f64>,
    pub sabha_tau: f64,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            em: EmOptions::default(),
            lfdr_form: LfdrForm::default(),
            bins: 1,
            seqstep_c: 2.0,
            hingeexp_c: 2.0,
            adaptive_s: None,
            adaptive_lam: None,
            sabha_tau: SABHA_TAU,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcedureError {
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Lfdr(#[from] LfdrError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Decisions in prior order, plus the mixture fit when one was estimated.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub decision: DecisionResult,
    pub fit: Option<MixtureFit>,
}

pub fn run_method(
    method: Method,
    data: &TestData,
    alpha: f64,
    opts: &MethodOptions,
) -> Result<Analysis, ProcedureError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ProcedureError::BadAlpha(alpha));
    }
    let p = data.pvalues();
    let decision = match method {
        Method::OrderShape => {
            let fit = em_fit_binned(data, opts.bins, &opts.em)?;
            let scores = mixture_lfdr(&fit, p, &Uniform, opts.lfdr_form)?;
            let decision = step_up(&scores, alpha).with_method(method.id());
            return Ok(Analysis {
                decision,
                fit: Some(fit),
            });
        }
        Method::Bh => baselines::bh(p, alpha),
        Method::Storey => baselines::storey_bh(p, alpha),
        Method::ForwardStop => {
            baselines::accumulation_test(p, AccumulationKind::ForwardStop, alpha)?
        }
        Method::SeqStep => {
            baselines::accumulation_test(p, AccumulationKind::SeqStep(opts.seqstep_c), alpha)?
        }
        Method::HingeExp => {
            baselines::accumulation_test(p, AccumulationKind::HingeExp(opts.hingeexp_c), alpha)?
        }
        Method::AdaptiveSeqstep => baselines::adaptive_seqstep(
            p,
            alpha,
            opts.adaptive_s.unwrap_or(alpha),
            opts.adaptive_lam.unwrap_or(alpha),
        )?,
        Method::Sabha => baselines::sabha_ordered(p, opts.sabha_tau, alpha)?,
    };
    Ok(Analysis {
        decision,
        fit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.id()));
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert!("storey".parse::<Method>().is_err());
    }

    #[test]
    fn rejects_bad_alpha() {
        let data = TestData::ordered(&[0.1, 0.2]).unwrap();
        for alpha in [0.0, 1.0, f64::NAN] {
            assert!(matches!(
                run_method(Method::Bh, &data, alpha, &MethodOptions::default()),
                Err(ProcedureError::BadAlpha(_))
            ));
        }
    }

    #[test]
    fn method_label_matches_id() {
        let p: Vec<f64> = (1..=40).map(|i| i as f64 / 41.0).collect();
        let data = TestData::ordered(&p).unwrap();
        for m in Method::ALL {
            let a = run_method(m, &data, 0.1, &MethodOptions::default()).unwrap();
            assert_eq!(a.decision.method, m.id());
            assert_eq!(a.fit.is_some(), m == Method::OrderShape);
        }
    }
}
