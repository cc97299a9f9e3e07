//! Simulation scenarios with ground truth.
//!
//! A replicate is drawn as: null probabilities sorted ascending (the prior
//! order) → Bernoulli truth labels → z-values → one-sided p-values
//! `p = Φ(−z)` → optional covariate shuffle → optional variant.
//!
//! Randomness comes from ChaCha20 keyed by `(master_seed, scenario seed)`
//! with the replicate number as the stream id, so every replicate is an
//! independent, reproducible substream.

use std::io::{self, Write};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

use crate::data::{DataError, TestData};

/// Spread of the concentrated null-probability distributions.
pub const CONCENTRATED_SD: f64 = 0.005;
/// Location of the near-null component in the highly informative design.
pub const HIGH_NULL_MEAN: f64 = 0.99;
pub const HIGH_SIGNAL_MEAN: f64 = 0.5;
pub const HIGH_SIGNAL_SD: f64 = 0.1;
/// Blocks in the correlated design; each splits into two equal sub-blocks.
pub const BLOCKS: usize = 100;
/// Within-sub-block correlation; sub-blocks of one block correlate at its negative.
pub const BLOCK_RHO: f64 = 0.5;
/// Share of alternatives (or nulls) replaced by a variant.
pub const VARIANT_SHARE: f64 = 0.2;
pub const VARYING_F1_UPPER: f64 = 0.02;
pub const VARYING_F0_LOWER: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("density_target {target} is unreachable for {informativeness:?} informativeness")]
    UnreachableTarget {
        informativeness: Informativeness,
        target: f64,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SimulateError {
    SimulateError::InvalidField {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Informativeness {
    Weak,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    Normal,
    /// Shape-2 noncentral gamma matched to mean `ks` and variance 1.
    NoncentralGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependence {
    #[default]
    Independent,
    /// [`BLOCKS`] blocks of two sub-blocks, correlation `±BLOCK_RHO`.
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    None,
    /// The most promising alternatives draw p from `U(0, VARYING_F1_UPPER)`.
    VaryingF1,
    /// The least promising nulls draw p from `U(VARYING_F0_LOWER, 1)`.
    VaryingF0,
}

/// One simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub informativeness: Informativeness,
    /// Target mean of `1 − π₀`.
    pub density_target: f64,
    /// Mean of the alternative z-values.
    pub ks: f64,
    #[serde(default)]
    pub alternative: Alternative,
    #[serde(default)]
    pub dependence: Dependence,
    /// Fraction of prior-order positions shuffled.
    #[serde(default)]
    pub covariate_noise: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    /// Independent normal alternative, no noise, no variant.
    pub fn basic(m: usize, informativeness: Informativeness, density_target: f64, ks: f64) -> Self {
        ScenarioConfig {
            m,
            informativeness,
            density_target,
            ks,
            alternative: Alternative::Normal,
            dependence: Dependence::Independent,
            covariate_noise: 0.0,
            variant: Variant::None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.density_target) {
            return Err(invalid(
                "density_target",
                format!("{} is outside [0, 1]", self.density_target),
            ));
        }
        if !(self.ks > 0.0 && self.ks.is_finite()) {
            return Err(invalid(
                "ks",
                format!("{} is not a positive number", self.ks),
            ));
        }
        if !(0.0..=1.0).contains(&self.covariate_noise) {
            return Err(invalid(
                "covariate_noise",
                format!("{} is outside [0, 1]", self.covariate_noise),
            ));
        }
        if self.alternative == Alternative::NoncentralGamma && self.ks < 2f64.sqrt() {
            return Err(invalid(
                "ks",
                format!(
                    "{} is below √2, too small to match unit variance with a shape-2 gamma",
                    self.ks
                ),
            ));
        }
        if self.dependence == Dependence::Block && !self.m.is_multiple_of(2 * BLOCKS) {
            return Err(invalid(
                "m",
                format!(
                    "{} is not divisible by {} for the block design",
                    self.m,
                    2 * BLOCKS
                ),
            ));
        }
        Pi0Model::for_target(self.informativeness, self.density_target)?;
        Ok(())
    }
}

/// Distribution of the null probabilities for one cell. `N_C` denotes a
/// normal truncated to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Pi0Model {
    /// `π₀ ≡ 1`.
    GlobalNull,
    /// `N_C(mean, CONCENTRATED_SD²)`.
    Weak { mean: f64 },
    /// `Beta(a, 1)`.
    Moderate { a: f64 },
    /// `N_C(HIGH_SIGNAL_MEAN, HIGH_SIGNAL_SD²)` with probability `weight`,
    /// else `N_C(HIGH_NULL_MEAN, CONCENTRATED_SD²)`.
    High { weight: f64 },
}

/// Mean of `N(mu, sd²)` truncated to `[0, 1]`.
pub fn truncated_normal_mean(mu: f64, sd: f64) -> f64 {
    let n = Normal::standard();
    let (a, b) = ((0.0 - mu) / sd, (1.0 - mu) / sd);
    let mass = n.cdf(b) - n.cdf(a);
    mu + sd * (n.pdf(a) - n.pdf(b)) / mass
}

impl Pi0Model {
    /// Parameters putting the mean of `1 − π₀` at `target`, solved in closed
    /// form from the truncated-normal and beta means.
    pub fn for_target(
        informativeness: Informativeness,
        target: f64,
    ) -> Result<Self, SimulateError> {
        if target == 0.0 {
            return Ok(Pi0Model::GlobalNull);
        }
        let unreachable = SimulateError::UnreachableTarget {
            informativeness,
            target,
        };
        match informativeness {
            Informativeness::Weak => Ok(Pi0Model::Weak { mean: 1.0 - target }),
            Informativeness::Moderate => {
                if target >= 1.0 {
                    return Err(unreachable);
                }
                Ok(Pi0Model::Moderate {
                    a: (1.0 - target) / target,
                })
            }
            Informativeness::High => {
                let near_null = truncated_normal_mean(HIGH_NULL_MEAN, CONCENTRATED_SD);
                let signal = truncated_normal_mean(HIGH_SIGNAL_MEAN, HIGH_SIGNAL_SD);
                let weight = (near_null - (1.0 - target)) / (near_null - signal);
                if (0.0..=1.0).contains(&weight) {
                    Ok(Pi0Model::High { weight })
                } else {
                    Err(unreachable)
                }
            }
        }
    }

    /// Exact mean of `π₀` under the model.
    pub fn mean(&self) -> f64 {
        match *self {
            Pi0Model::GlobalNull => 1.0,
            Pi0Model::Weak { mean } => truncated_normal_mean(mean, CONCENTRATED_SD),
            Pi0Model::Moderate { a } => a / (a + 1.0),
            Pi0Model::High { weight } => {
                weight * truncated_normal_mean(HIGH_SIGNAL_MEAN, HIGH_SIGNAL_SD)
                    + (1.0 - weight) * truncated_normal_mean(HIGH_NULL_MEAN, CONCENTRATED_SD)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Pi0Model::GlobalNull => 1.0,
            Pi0Model::Weak { mean } => truncated_normal(rng, mean, CONCENTRATED_SD),
            Pi0Model::Moderate { a } => Beta::new(a, 1.0).expect("positive beta shape").sample(rng),
            Pi0Model::High { weight } => {
                if rng.random::<f64>() < weight {
                    truncated_normal(rng, HIGH_SIGNAL_MEAN, HIGH_SIGNAL_SD)
                } else {
                    truncated_normal(rng, HIGH_NULL_MEAN, CONCENTRATED_SD)
                }
            }
        }
    }
}

/// `N(mu, sd²)` conditioned on `[0, 1]`, by rejection.
fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mu: f64, sd: f64) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = mu + sd * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
}

/// Shape-2 noncentral gamma as a Poisson mixture: `J ~ Poisson(λ)`,
/// `z | J ~ Gamma(2 + J, scale)`. Then `E z = scale(2 + λ)` and
/// `Var z = scale²(2 + 2λ)`; matching mean `ks` and variance 1 gives
/// `λ² − cλ − c = 0` with `c = 2ks² − 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralGamma {
    pub noncentrality: f64,
    pub scale: f64,
}

impl NoncentralGamma {
    pub fn matching(ks: f64) -> Option<Self> {
        let c = 2.0 * ks * ks - 4.0;
        if c < 0.0 {
            return None;
        }
        let noncentrality = (c + (c * c + 4.0 * c).sqrt()) / 2.0;
        Some(NoncentralGamma {
            noncentrality,
            scale: ks / (2.0 + noncentrality),
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * (2.0 + self.noncentrality)
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * (2.0 + 2.0 * self.noncentrality)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let j = if self.noncentrality > 0.0 {
            Poisson::new(self.noncentrality)
                .expect("positive rate")
                .sample(rng)
        } else {
            0.0
        };
        Gamma::new(2.0 + j, self.scale)
            .expect("positive shape and scale")
            .sample(rng)
    }
}

/// A replicate with its ground truth, all in prior order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    /// p-values with truth labels (`true` = alternative).
    pub data: TestData,
    pub pi0_true: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<bool>,
    /// `(block, sub-block)` membership in the correlated design.
    pub block_of: Option<Vec<(usize, usize)>>,
}

impl SimulatedData {
    fn assemble(
        pvalues: &[f64],
        pi0_true: Vec<f64>,
        z: Vec<f64>,
        theta: Vec<bool>,
        block_of: Option<Vec<(usize, usize)>>,
    ) -> Result<Self, SimulateError> {
        let data = TestData::ordered(pvalues)?.with_truth(theta.clone())?;
        Ok(SimulatedData {
            data,
            pi0_true,
            z,
            theta,
            block_of,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Tab-separated columns `index, pvalue, pi0_true, theta, z`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index\tpvalue\tpi0_true\ttheta\tz")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                i,
                self.data.pvalues()[i],
                self.pi0_true[i],
                u8::from(self.theta[i]),
                self.z[i]
            )?;
        }
        Ok(())
    }

    fn permute(&self, perm: &[usize]) -> Result<Self, SimulateError> {
        let pick_f = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let pvalues = pick_f(self.data.pvalues());
        SimulatedData::assemble(
            &pvalues,
            pick_f(&self.pi0_true),
            pick_f(&self.z),
            perm.iter().map(|&i| self.theta[i]).collect(),
            self.block_of
                .as_ref()
                .map(|b| perm.iter().map(|&i| b[i]).collect()),
        )
    }
}

/// Generator for replicate `rep` of a scenario.
pub fn replicate_rng(master_seed: u64, scenario_seed: u64, rep: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&scenario_seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// `m` draws of `π₀`, sorted ascending.
pub fn gen_pi0<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<Vec<f64>, SimulateError> {
    config.validate()?;
    let model = Pi0Model::for_target(config.informativeness, config.density_target)?;
    let mut pi0: Vec<f64> = (0..config.m).map(|_| model.sample(rng)).collect();
    pi0.sort_by(f64::total_cmp);
    Ok(pi0)
}

fn standard_normal_cdf_upper(z: f64) -> f64 {
    Normal::standard().cdf(-z)
}

/// `θᵢ ~ Bernoulli(1 − π₀ᵢ)`, z-values per the configured alternative and
/// dependence, `pᵢ = Φ(−zᵢ)`.
pub fn gen_truth_and_pvalues<R: Rng + ?Sized>(
    pi0: &[f64],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<SimulatedData, SimulateError> {
    config.validate()?;
    if pi0.len() != config.m {
        return Err(invalid(
            "m",
            format!("pi0 has {} entries, expected {}", pi0.len(), config.m),
        ));
    }
    let m = config.m;
    let theta: Vec<bool> = pi0.iter().map(|&p| rng.random::<f64>() >= p).collect();
    let gamma = match config.alternative {
        Alternative::Normal => None,
        Alternative::NoncentralGamma => NoncentralGamma::matching(config.ks),
    };
    // Normal z-values are `ks·θ + noise`; gamma alternatives replace the whole draw.
    let draw = |rng: &mut R, alt: bool, noise: f64| match gamma {
        Some(g) if alt => g.sample(rng),
        _ if alt => config.ks + noise,
        _ => noise,
    };

    let (z, block_of) = match config.dependence {
        Dependence::Independent => {
            let z: Vec<f64> = theta
                .iter()
                .map(|&t| {
                    let noise: f64 = rng.sample(StandardNormal);
                    draw(rng, t, noise)
                })
                .collect();
            (z, None)
        }
        Dependence::Block => {
            let per_sub = m / (2 * BLOCKS);
            let mut labels: Vec<(usize, usize)> = (0..BLOCKS)
                .flat_map(|b| (0..2).flat_map(move |s| std::iter::repeat_n((b, s), per_sub)))
                .collect();
            labels.shuffle(rng);
            let shared: Vec<f64> = (0..BLOCKS)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let (common, own) = (BLOCK_RHO.sqrt(), (1.0 - BLOCK_RHO).sqrt());
            let z: Vec<f64> = theta
                .iter()
                .zip(&labels)
                .map(|(&t, &(b, s))| {
                    let sign = if s == 0 { 1.0 } else { -1.0 };
                    let own_noise: f64 = rng.sample(StandardNormal);
                    draw(rng, t, common * sign * shared[b] + own * own_noise)
                })
                .collect();
            (z, Some(labels))
        }
    };
    let pvalues: Vec<f64> = z.iter().map(|&zi| standard_normal_cdf_upper(zi)).collect();
    SimulatedData::assemble(&pvalues, pi0.to_vec(), z, theta, block_of)
}

/// Permutes a uniformly chosen `fraction` of prior-order positions among
/// themselves.
pub fn shuffle_covariate<R: Rng + ?Sized>(
    data: &SimulatedData,
    fraction: f64,
    rng: &mut R,
) -> Result<SimulatedData, SimulateError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid(
            "covariate_noise",
            format!("{fraction} is outside [0, 1]"),
        ));
    }
    let m = data.len();
    let count = (fraction * m as f64).round() as usize;
    if count < 2 {
        return Ok(data.clone());
    }
    let mut positions = sample(rng, m, count).into_vec();
    positions.sort_unstable();
    let mut shuffled = positions.clone();
    shuffled.shuffle(rng);
    let mut perm: Vec<usize> = (0..m).collect();
    for (&dst, &src) in positions.iter().zip(&shuffled) {
        perm[dst] = src;
    }
    data.permute(&perm)
}

/// Replaces p-values of the designated subset with uniform draws, stored
/// through their z-values so `p = Φ(−z)` still holds.
pub fn apply_variant<R: Rng + ?Sized>(
    data: &SimulatedData,
    variant: Variant,
    rng: &mut R,
) -> Result<SimulatedData, SimulateError> {
    let (targets, lo, hi): (Vec<usize>, f64, f64) = match variant {
        Variant::None => return Ok(data.clone()),
        Variant::VaryingF1 => {
            let alts: Vec<usize> = (0..data.len()).filter(|&i| data.theta[i]).collect();
            let n = (VARIANT_SHARE * alts.len() as f64).round() as usize;
            (alts[..n].to_vec(), 0.0, VARYING_F1_UPPER)
        }
        Variant::VaryingF0 => {
            let nulls: Vec<usize> = (0..data.len()).filter(|&i| !data.theta[i]).collect();
            let n = (VARIANT_SHARE * nulls.len() as f64).round() as usize;
            (nulls[nulls.len() - n..].to_vec(), VARYING_F0_LOWER, 1.0)
        }
    };
    let normal = Normal::standard();
    let mut pvalues = data.data.pvalues().to_vec();
    let mut z = data.z.clone();
    for i in targets {
        let zi = -normal.inverse_cdf(rng.random_range(lo..hi));
        z[i] = zi;
        pvalues[i] = standard_normal_cdf_upper(zi).clamp(lo, hi);
    }
    SimulatedData::assemble(
        &pvalues,
        data.pi0_true.clone(),
        z,
        data.theta.clone(),
        data.block_of.clone(),
    )
}

/// One full replicate of `config`.
pub fn simulate<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<SimulatedData, SimulateError> {
    let pi0 = gen_pi0(config, rng)?;
    let raw = gen_truth_and_pvalues(&pi0, config, rng)?;
    let shuffled = shuffle_covariate(&raw, config.covariate_noise, rng)?;
    apply_variant(&shuffled, config.variant, rng)
}
