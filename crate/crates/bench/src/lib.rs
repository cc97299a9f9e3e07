//! Monte Carlo harness: simulate scenario grids, run every method on each
//! replicate, and aggregate FDR and power with normal-approximation
//! confidence intervals.

pub mod config;
pub mod metrics;
pub mod runner;

pub use config::{ConfigError, GridSpec, SimulationConfig};
pub use metrics::{fdp_and_power, ReplicateMetrics, Summary};
pub use runner::{run_grid, GridError, MetricsRow, MetricsTable};
