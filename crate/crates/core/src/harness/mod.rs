//! Parameter sweeps, random baselines, k-means summaries and result files.

mod export;
mod kmeans;
mod sweep;

pub use export::{
    error_points, export_results, plot_data, read_records_csv, read_records_json,
    write_records_csv, write_records_json, PlotData, ResultFormat, Series, CSV_HEADER,
};
pub use kmeans::{kmeans, kmeans_with, lloyd, ClusterSummary, LloydRun};
pub use sweep::{
    baseline_seed, greedy_count_range, greedy_counts, log_space, mean_errors_by_size,
    sweep_greedy, sweep_random, ExperimentRecord, SweepConfig,
};
