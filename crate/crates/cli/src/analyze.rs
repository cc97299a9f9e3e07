//! The `analyze` subcommand.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ordershape::mixture::{EmOptions, MixtureError};
use ordershape::procedure::ProcedureError;
use ordershape::{run_method, Analysis, CovariateDirection, Method, MethodOptions, TestData};
use serde::Serialize;

use crate::input::{read_groups, read_table, Table};
use crate::{AnalyzeArgs, CliError};

pub const DECISIONS: &str = "decisions.tsv";
pub const ESTIMATES: &str = "estimates.tsv";
pub const F1: &str = "f1.tsv";
pub const SUMMARY: &str = "summary.json";
const OUTPUTS: [&str; 4] = [DECISIONS, ESTIMATES, F1, SUMMARY];

#[derive(Debug, Serialize)]
struct FitSummary {
    iterations: usize,
    converged: bool,
    final_loglik: f64,
    pi_global: f64,
    bins: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    method: Method,
    alpha: f64,
    m: usize,
    rejections: usize,
    threshold: f64,
    covariate: Option<String>,
    covariate_direction: CovariateDirection,
    seed: u64,
    fit: Option<FitSummary>,
}

/// Prior-order ranking: group label, then covariate, then input row.
pub fn prior_ranking(
    table: &Table,
    groups: Option<&[i64]>,
    direction: CovariateDirection,
) -> Vec<usize> {
    let mut ranking: Vec<usize> = (0..table.len()).collect();
    ranking.sort_by(|&a, &b| {
        let by_group = groups.map_or(std::cmp::Ordering::Equal, |g| g[a].cmp(&g[b]));
        let by_covariate = table
            .covariate
            .as_ref()
            .map_or(std::cmp::Ordering::Equal, |c| match direction {
                CovariateDirection::Ascending => c[a].total_cmp(&c[b]),
                CovariateDirection::Descending => c[b].total_cmp(&c[a]),
            });
        by_group.then(by_covariate)
    });
    ranking
}

/// Dense group ids `0, 1, …` in prior order.
fn dense_groups(labels: &[i64], ranking: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(ranking.len());
    let mut current = 0;
    for (r, &i) in ranking.iter().enumerate() {
        if r > 0 && labels[i] != labels[ranking[r - 1]] {
            current += 1;
        }
        out.push(current);
    }
    out
}

fn classify(e: ProcedureError) -> CliError {
    match &e {
        ProcedureError::Mixture(
            MixtureError::TooFewHypotheses { .. }
            | MixtureError::BinTooSmall { .. }
            | MixtureError::NoBins
            | MixtureError::LengthMismatch { .. },
        )
        | ProcedureError::BadAlpha(_)
        | ProcedureError::Baseline(_) => CliError::Input(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn remove_outputs(dir: &Path) {
    for name in OUTPUTS {
        let _ = fs::remove_file(dir.join(name));
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Input(format!(
            "--alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let table = read_table(&args.input, &args.pvalue_col, args.covariate_col.as_deref())?;
    let labels = args
        .groups
        .as_deref()
        .map(|g| read_groups(g, table.len()))
        .transpose()?;
    let direction = CovariateDirection::from(args.covariate_direction);
    let ranking = prior_ranking(&table, labels.as_deref(), direction);
    let data = TestData::with_ranking(&table.pvalues, &ranking)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let opts = MethodOptions {
        em: EmOptions {
            max_iter: args.max_iter,
            groups: labels.as_deref().map(|l| dense_groups(l, &ranking)),
            ..EmOptions::default()
        },
        lfdr_form: args.lfdr_form.into(),
        bins: args.bins,
        ..MethodOptions::default()
    };
    let analysis = match run_method(args.method, &data, args.alpha, &opts) {
        Ok(a) => a,
        Err(e) => {
            let e = classify(e);
            if matches!(e, CliError::Numerical(_)) {
                remove_outputs(&args.out);
            }
            return Err(e);
        }
    };
    if let Some(fit) = analysis.fit.as_ref().filter(|f| !f.converged) {
        let msg = format!("EM did not converge within {} iterations", fit.iterations);
        if args.strict_convergence {
            remove_outputs(&args.out);
            return Err(CliError::Numerical(msg));
        }
        eprintln!("warning: {msg}; the final iterate is used");
    }
    let written = write_outputs(args, &table, &ranking, &analysis);
    if written.is_err() {
        remove_outputs(&args.out);
    }
    written
}

fn write_outputs(
    args: &AnalyzeArgs,
    table: &Table,
    ranking: &[usize],
    analysis: &Analysis,
) -> Result<(), CliError> {
    let dir = &args.out;
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let d = &analysis.decision;
    let mut rank_of = vec![0; ranking.len()];
    for (r, &i) in ranking.iter().enumerate() {
        rank_of[i] = r;
    }

    let mut text = String::from("row\tpvalue\tcovariate\trank\tscore\trejected\n");
    for (i, &p) in table.pvalues.iter().enumerate() {
        let r = rank_of[i];
        let cov = table
            .covariate
            .as_ref()
            .map_or("NA".to_string(), |c| c[i].to_string());
        text += &format!(
            "{}\t{p}\t{cov}\t{}\t{}\t{}\n",
            i + 1,
            r + 1,
            d.scores[r],
            u8::from(d.rejected[r])
        );
    }
    write(dir.join(DECISIONS), &text)?;

    let fit_summary = match &analysis.fit {
        Some(fit) => {
            let bins = fit.bins();
            let mut est = String::from("rank\trow\tpi0\tpi0_calibrated\tbin\n");
            for (b, range) in bins.iter().enumerate() {
                for r in range.clone() {
                    est += &format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        r + 1,
                        ranking[r] + 1,
                        fit.pi0[r],
                        fit.pi0_calibrated[r],
                        b + 1
                    );
                }
            }
            write(dir.join(ESTIMATES), &est)?;
            let mut f1 = String::from("bin\tfirst_rank\tleft\tright\theight\n");
            for (b, (density, range)) in fit.f1.iter().zip(&bins).enumerate() {
                for (left, right, height) in density.intervals() {
                    f1 += &format!(
                        "{}\t{}\t{left}\t{right}\t{height}\n",
                        b + 1,
                        range.start + 1
                    );
                }
            }
            write(dir.join(F1), &f1)?;
            Some(FitSummary {
                iterations: fit.iterations,
                converged: fit.converged,
                final_loglik: fit.final_loglik(),
                pi_global: fit.pi_global,
                bins: fit.f1.len(),
            })
        }
        None => {
            for stale in [ESTIMATES, F1] {
                let _ = fs::remove_file(dir.join(stale));
            }
            None
        }
    };

    let summary = Summary {
        method: args.method,
        alpha: args.alpha,
        m: table.len(),
        rejections: d.k_hat,
        threshold: d.threshold,
        covariate: args.covariate_col.clone(),
        covariate_direction: CovariateDirection::from(args.covariate_direction),
        seed: args.seed,
        fit: fit_summary,
    };
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Numerical(e.to_string()))?;
    write(dir.join(SUMMARY), &(json + "\n"))
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
