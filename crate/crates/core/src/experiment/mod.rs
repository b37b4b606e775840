//! Simulation drivers behind the `hdtest` binary.

pub mod config;
pub mod report;
mod run;

pub use config::{Command, ExperimentConfig, Grid, PipelineSpec, Preset, USpec, XiSpec};
pub use report::{CellReport, ExperimentReport, Metric, PlotSeries};
pub use run::{ci_sweep, real_data, table_betamin, table_cone, RunOutput};
