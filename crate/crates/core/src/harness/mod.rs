//! Experiment harness: configuration, seeded multi-realization runs, sweeps,
//! timing, and plot data.

mod bench;
mod config;
mod experiment;
mod plot;

pub use bench::{benchmark_blocks, benchmark_iteration, BenchReport, BlockBreakdown, TimingStat, SCALING_ATOMS};
pub use config::{load_config, parse_config, ChannelConfig, ExperimentConfig, RunConfig, SignalingConfig};
pub use experiment::{
    child_seed, run_experiment, run_realization, run_sweep, simulate, trace_csv, trace_file_name, variant_dir,
    write_run, PointMetrics, RealizationOutcome, RealizationSummary, RunOutput, RunSummary, Scenario, Stats,
    SweepAxis, SweepEntry, SweepOutput, SUMMARY_SCHEMA_VERSION, TRACE_HEADER,
};
pub use plot::{collect_series, emit_plot_data, series_csv, PlotPoint, Series, PLOT_HEADER};
