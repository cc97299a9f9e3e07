//! Parallel grid execution and aggregation.
//!
//! Each `(scenario, replicate)` job simulates one dataset and runs every
//! method on it, so methods are compared on identical data. Jobs run on the
//! rayon pool; results are reduced in job order, making tables independent
//! of thread scheduling.

use std::io::Write;
use std::time::Instant;

use ordershape::simulate::{replicate_rng, simulate, ScenarioConfig, SimulateError};
use ordershape::{run_method, Method, MethodOptions};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{fdp_and_power, ReplicateMetrics, Summary};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("reps must be at least 1")]
    NoReps,
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("scenario {index}: {source}")]
    Scenario { index: usize, source: SimulateError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A method failure on one replicate; the replicate is excluded from that
/// method's aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub method: Method,
    pub scenario: usize,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub scenario_index: usize,
    pub scenario: ScenarioConfig,
    pub method: Method,
    pub fdr: Summary,
    pub power: Summary,
    pub mean_rejections: f64,
    pub mean_runtime_ms: f64,
    /// Replicates that completed.
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub alpha: f64,
    pub master_seed: u64,
    /// One row per `(scenario, method)`, scenarios outermost.
    pub rows: Vec<MetricsRow>,
    /// Completed replicates in `(scenario, rep, method)` order.
    pub replicates: Vec<ReplicateMetrics>,
    pub failures: Vec<Failure>,
}

const CSV_HEADER: [&str; 18] = [
    "m",
    "informativeness",
    "density_target",
    "ks",
    "alternative",
    "dependence",
    "covariate_noise",
    "variant",
    "seed",
    "method",
    "mean_fdr",
    "fdr_ci_lo",
    "fdr_ci_hi",
    "mean_power",
    "power_ci_lo",
    "power_ci_hi",
    "reps",
    "failures",
];

/// Serialized name of a unit enum variant.
fn label<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl MetricsTable {
    pub fn row(&self, scenario: usize, method: Method) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.scenario_index == scenario && r.method == method)
    }

    fn per_rep(&self, scenario: usize, method: Method) -> Vec<&ReplicateMetrics> {
        self.replicates
            .iter()
            .filter(|r| r.scenario == scenario && r.method == method)
            .collect()
    }

    /// Per-replicate power difference `a − b` over replicates where both
    /// completed.
    pub fn paired_power_difference(&self, scenario: usize, a: Method, b: Method) -> Summary {
        let rb = self.per_rep(scenario, b);
        let diffs: Vec<f64> = self
            .per_rep(scenario, a)
            .into_iter()
            .filter_map(|x| {
                rb.iter()
                    .find(|y| y.rep == x.rep)
                    .map(|y| x.power - y.power)
            })
            .collect();
        Summary::of(&diffs)
    }

    /// Writes the plot-ready table. Runtime is left out so reruns compare
    /// bitwise.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), GridError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let s = &r.scenario;
            w.write_record([
                s.m.to_string(),
                label(&s.informativeness),
                s.density_target.to_string(),
                s.ks.to_string(),
                label(&s.alternative),
                label(&s.dependence),
                s.covariate_noise.to_string(),
                label(&s.variant),
                s.seed.to_string(),
                r.method.id().to_string(),
                r.fdr.mean.to_string(),
                r.fdr.ci_lo.to_string(),
                r.fdr.ci_hi.to_string(),
                r.power.mean.to_string(),
                r.power.ci_lo.to_string(),
                r.power.ci_hi.to_string(),
                r.reps.to_string(),
                r.failures.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

type Outcome = Result<ReplicateMetrics, Failure>;

fn run_job(
    index: usize,
    scenario: &ScenarioConfig,
    rep: usize,
    methods: &[Method],
    alpha: f64,
    master_seed: u64,
    opts: &MethodOptions,
) -> Result<Vec<Outcome>, GridError> {
    let mut rng = replicate_rng(master_seed, scenario.seed, rep as u64);
    let sim =
        simulate(scenario, &mut rng).map_err(|source| GridError::Scenario { index, source })?;
    Ok(methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = run_method(method, &sim.data, alpha, opts);
            let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
            match result {
                Ok(analysis) => {
                    let (fdp, power) = fdp_and_power(&analysis.decision, &sim.theta);
                    Ok(ReplicateMetrics {
                        method,
                        scenario: index,
                        rep,
                        fdp,
                        power,
                        rejections: analysis.decision.k_hat,
                        runtime_ms,
                    })
                }
                Err(e) => Err(Failure {
                    method,
                    scenario: index,
                    rep,
                    message: e.to_string(),
                }),
            }
        })
        .collect())
}

/// Runs every method on `reps` replicates of every scenario.
pub fn run_grid(
    scenarios: &[ScenarioConfig],
    methods: &[Method],
    reps: usize,
    alpha: f64,
    master_seed: u64,
    opts: &MethodOptions,
) -> Result<MetricsTable, GridError> {
    if reps == 0 {
        return Err(GridError::NoReps);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GridError::BadAlpha(alpha));
    }
    for (index, s) in scenarios.iter().enumerate() {
        s.validate()
            .map_err(|source| GridError::Scenario { index, source })?;
    }

    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..reps).map(move |r| (s, r)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(s, r)| run_job(s, &scenarios[s], r, methods, alpha, master_seed, opts))
        .collect::<Result<Vec<_>, _>>()?;

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        match outcome {
            Ok(m) => replicates.push(m),
            Err(f) => failures.push(f),
        }
    }

    let mut rows = Vec::with_capacity(scenarios.len() * methods.len());
    for (index, scenario) in scenarios.iter().enumerate() {
        for &method in methods {
            let done: Vec<&ReplicateMetrics> = replicates
                .iter()
                .filter(|r| r.scenario == index && r.method == method)
                .collect();
            let fdp: Vec<f64> = done.iter().map(|r| r.fdp).collect();
            let power: Vec<f64> = done.iter().map(|r| r.power).collect();
            let n = done.len().max(1) as f64;
            rows.push(MetricsRow {
                scenario_index: index,
                scenario: scenario.clone(),
                method,
                fdr: Summary::of_proportions(&fdp),
                power: Summary::of_proportions(&power),
                mean_rejections: done.iter().map(|r| r.rejections as f64).sum::<f64>() / n,
                mean_runtime_ms: done.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
                reps: done.len(),
                failures: failures
                    .iter()
                    .filter(|f| f.scenario == index && f.method == method)
                    .count(),
            });
        }
    }
    Ok(MetricsTable {
        alpha,
        master_seed,
        rows,
        replicates,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ordershape::simulate::Informativeness;

    fn small() -> Vec<ScenarioConfig> {
        vec![ScenarioConfig::basic(500, Informativeness::High, 0.2, 3.0)]
    }

    #[test]
    fn one_row_per_scenario_method() {
        let t = run_grid(
            &small(),
            &[Method::Bh, Method::OrderShape],
            2,
            0.05,
            1,
            &MethodOptions::default(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.replicates.len(), 4);
        for r in &t.rows {
            assert_eq!(r.reps + r.failures, 2);
            assert!((0.0..=1.0).contains(&r.fdr.mean) && r.fdr.se >= 0.0);
        }
    }

    #[test]
    fn single_rep_is_degenerate() {
        let t = run_grid(
            &small(),
            &[Method::Bh],
            1,
            0.05,
            1,
            &MethodOptions::default(),
        )
        .unwrap();
        let r = &t.rows[0];
        assert_eq!(r.fdr.ci_lo, r.fdr.mean);
        assert_eq!(r.power.ci_hi, r.power.mean);
    }

    #[test]
    fn csv_reproducible() {
        let run = || {
            let t = run_grid(
                &small(),
                &[Method::Storey, Method::Sabha],
                3,
                0.1,
                7,
                &MethodOptions::default(),
            )
            .unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), CSV_HEADER.len());
        assert!(lines[1].starts_with("500,high,0.2,3,normal,independent,0,none,0,st,"));
    }

    #[test]
    fn failures_are_counted() {
        // Too few hypotheses for the mixture fit: every replicate fails.
        let s = vec![ScenarioConfig::basic(
            5,
            Informativeness::Moderate,
            0.2,
            3.0,
        )];
        let t = run_grid(
            &s,
            &[Method::OrderShape, Method::Bh],
            2,
            0.05,
            1,
            &MethodOptions::default(),
        )
        .unwrap();
        let os = t.row(0, Method::OrderShape).unwrap();
        assert_eq!((os.reps, os.failures), (0, 2));
        assert_eq!(t.row(0, Method::Bh).unwrap().reps, 2);
    }
}
