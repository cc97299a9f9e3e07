//! The `simulate` subcommand.

use std::fs;

use ordershape::MethodOptions;
use ordershape_bench::{run_grid, GridError, SimulationConfig};

use crate::{CliError, SimulateArgs};

pub const METRICS: &str = "metrics.csv";

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let config =
        SimulationConfig::load(&args.config).map_err(|e| CliError::Config(e.to_string()))?;
    let seed = args.seed.unwrap_or(config.master_seed);
    let table = run_grid(
        &config.all_scenarios(),
        &config.methods,
        config.reps,
        config.alpha,
        seed,
        &MethodOptions::default(),
    )
    .map_err(|e| match e {
        GridError::Csv(_) => CliError::Input(e.to_string()),
        _ => CliError::Config(e.to_string()),
    })?;
    for f in &table.failures {
        eprintln!(
            "warning: scenario {} rep {} method {}: {}",
            f.scenario, f.rep, f.method, f.message
        );
    }
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let path = args.out.join(METRICS);
    let file = fs::File::create(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    table.write_csv(file).map_err(|e| {
        let _ = fs::remove_file(&path);
        CliError::Input(e.to_string())
    })
}
