//! Seeded Monte Carlo sweeps over the estimators, configured from TOML.

mod config;
mod output;
mod runner;
mod stats;

pub use config::{EmConfig, ExperimentConfig, Scenario, SpatialConfig};
pub use output::{emit, to_csv, to_svg, OutputFormat};
pub use runner::{
    draw_blocks, draw_geometry, run_experiment, run_experiment_with_workers, user_correlations, Geometry, ResultRow,
    TrialBlocks,
};
pub use stats::{run_trials, Slots, Summary, N_BATCHES};
