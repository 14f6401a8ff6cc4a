//! Experiment orchestration: JSON configs, seeded sweeps with resumable
//! output, aggregation over runs, CSV and plot-data emission, and the CLI.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod output;
pub mod sweep;

pub use aggregate::{aggregate, CellSummary, Histogram, NModelRow, SeriesStats, Summary};
pub use cli::{cli_main, report};
pub use config::{Experiment, ExperimentConfig, TrainOverrides};
pub use output::{emit_plot_data, emit_records_csv, emit_summary_csv, load_records_csv};
pub use sweep::{run_oracle_suite, run_sweep, SweepOutput, UniverseResult};
