//! Experiment orchestration: configuration, the round loop, sweeps and
//! on-disk artifacts.

mod config;
mod federation;
mod output;
mod sweep;

pub use config::{DatasetConfig, ExperimentConfig, GeoMedSettings, ModelConfig, TrainSettings};
pub use federation::{run_experiment, ExperimentOutcome, Federation, RoundDetection, Summary};
pub use output::{rounds_csv, write_run_artifacts, write_sweep_table};
pub use sweep::{
    parse_fractions, run_sweep, scenario_config, scenario_label, sweep_rows, write_sweep, Scenario,
    SweepRow,
};
