//! Ranked p-value collections.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// p-values are kept inside `[P_CLIP, 1 − P_CLIP]` after ingestion.
pub const P_CLIP: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("no p-values supplied")]
    Empty,
    #[error("p-value at index {index} is outside [0, 1] ({value})")]
    BadPvalue { index: usize, value: f64 },
    #[error("covariate at index {index} is not finite ({value})")]
    BadCovariate { index: usize, value: f64 },
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("ranking is not a permutation of 0..{0}")]
    NotPermutation(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CovariateDirection {
    /// Smallest covariate value is the most promising hypothesis.
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrderSource {
    ExplicitRanking,
    Covariate(CovariateDirection),
}

/// p-values indexed in prior order: position 0 is the hypothesis believed
/// most likely to be an alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestData {
    pvalues: Vec<f64>,
    /// `original_index[rank]` is the caller's index of the hypothesis at `rank`.
    original_index: Vec<usize>,
    order_source: OrderSource,
    /// `true` for alternatives, in prior order. Simulation only.
    truth: Option<Vec<bool>>,
}

fn clip_pvalues(pvalues: &[f64]) -> Result<Vec<f64>, DataError> {
    if pvalues.is_empty() {
        return Err(DataError::Empty);
    }
    pvalues
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(value.clamp(P_CLIP, 1.0 - P_CLIP))
            } else {
                Err(DataError::BadPvalue { index, value })
            }
        })
        .collect()
}

impl TestData {
    /// p-values already listed in prior order.
    pub fn ordered(pvalues: &[f64]) -> Result<Self, DataError> {
        let pvalues = clip_pvalues(pvalues)?;
        Ok(TestData {
            original_index: (0..pvalues.len()).collect(),
            pvalues,
            order_source: OrderSource::ExplicitRanking,
            truth: None,
        })
    }

    /// `ranking[r]` names the original index placed at rank `r`.
    pub fn with_ranking(pvalues: &[f64], ranking: &[usize]) -> Result<Self, DataError> {
        let clipped = clip_pvalues(pvalues)?;
        let m = clipped.len();
        if ranking.len() != m {
            return Err(DataError::LengthMismatch {
                what: "ranking",
                got: ranking.len(),
                expected: m,
            });
        }
        let mut seen = vec![false; m];
        for &i in ranking {
            if i >= m || seen[i] {
                return Err(DataError::NotPermutation(m));
            }
            seen[i] = true;
        }
        Ok(TestData {
            pvalues: ranking.iter().map(|&i| clipped[i]).collect(),
            original_index: ranking.to_vec(),
            order_source: OrderSource::ExplicitRanking,
            truth: None,
        })
    }

    /// Ranks hypotheses by covariate; ties keep their input order.
    pub fn from_covariate(
        pvalues: &[f64],
        covariate: &[f64],
        direction: CovariateDirection,
    ) -> Result<Self, DataError> {
        if covariate.len() != pvalues.len() {
            return Err(DataError::LengthMismatch {
                what: "covariate",
                got: covariate.len(),
                expected: pvalues.len(),
            });
        }
        if let Some((index, &value)) = covariate.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(DataError::BadCovariate { index, value });
        }
        let mut ranking: Vec<usize> = (0..pvalues.len()).collect();
        match direction {
            CovariateDirection::Ascending => {
                ranking.sort_by(|&a, &b| covariate[a].total_cmp(&covariate[b]))
            }
            CovariateDirection::Descending => {
                ranking.sort_by(|&a, &b| covariate[b].total_cmp(&covariate[a]))
            }
        }
        let mut data = Self::with_ranking(pvalues, &ranking)?;
        data.order_source = OrderSource::Covariate(direction);
        Ok(data)
    }

    /// Attaches ground truth given in prior order.
    pub fn with_truth(mut self, truth: Vec<bool>) -> Result<Self, DataError> {
        if truth.len() != self.len() {
            return Err(DataError::LengthMismatch {
                what: "truth",
                got: truth.len(),
                expected: self.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    pub fn order_source(&self) -> OrderSource {
        self.order_source
    }

    pub fn truth(&self) -> Option<&[bool]> {
        self.truth.as_deref()
    }

    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clips_to_open_interval() {
        let d = TestData::ordered(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(d.pvalues(), &[P_CLIP, 0.5, 1.0 - P_CLIP]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(
            TestData::ordered(&[0.1, 1.5]),
            Err(DataError::BadPvalue {
                index: 1,
                value: 1.5
            })
        );
        assert!(matches!(
            TestData::ordered(&[f64::NAN]),
            Err(DataError::BadPvalue { index: 0, .. })
        ));
        assert_eq!(TestData::ordered(&[]), Err(DataError::Empty));
    }

    #[test]
    fn covariate_ranking_is_stable() {
        let d = TestData::from_covariate(
            &[0.1, 0.2, 0.3, 0.4],
            &[2.0, 1.0, 2.0, 0.5],
            CovariateDirection::Ascending,
        )
        .unwrap();
        assert_eq!(d.original_index(), &[3, 1, 0, 2]);
        assert_eq!(d.pvalues(), &[0.4, 0.2, 0.1, 0.3]);

        let d = TestData::from_covariate(
            &[0.1, 0.2, 0.3, 0.4],
            &[2.0, 1.0, 2.0, 0.5],
            CovariateDirection::Descending,
        )
        .unwrap();
        assert_eq!(d.original_index(), &[0, 2, 1, 3]);
    }

    #[test]
    fn ranking_must_be_permutation() {
        assert_eq!(
            TestData::with_ranking(&[0.1, 0.2], &[0, 0]),
            Err(DataError::NotPermutation(2))
        );
    }
}
