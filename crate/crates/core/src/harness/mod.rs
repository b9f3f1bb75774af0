//! Experiment configuration, slope fitting and reports.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod report;

pub use config::{DataConfig, Experiment, ExperimentConfig, GridConfig, Knobs, TimeConfig};
pub use experiments::run_experiment;
pub use fit::{fit_decay_slope, log_times, SlopeFit};
pub use report::{Check, Constant, RunReport, SlopeRow, Table, DECAY_COLUMNS, LOW_MACH_COLUMNS};
