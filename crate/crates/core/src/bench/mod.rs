//! Multi-seed experiment harness: specs, reports, comparisons and plot data.

mod compare;
mod plots;
mod report;
mod spec;

pub use compare::{
    compare_report, compare_values, improvement_pct, Comparison, ComparisonRow, Improvement,
};
pub use plots::{emit_plots, GNUPLOT_FILE, REWARD_FILE, TRACKING_FILE};
pub use report::{
    metrics_file, now_unix, run_experiment, thread_cap, trajectory_file, write_run_info, RunInfo,
    RunReport, SeedDetail, SeedRun, COMMIT_ENV, MATRIX_FILE, REPORT_FILE, RUN_INFO_FILE,
    THREADS_ENV,
};
pub use spec::{
    default_window, parse_scenario, parse_seeds, ExperimentSpec, Preset, SpecOverrides,
    DEFAULT_BTBV_FRACTION, DEFAULT_NOISE_FRACTION,
};
