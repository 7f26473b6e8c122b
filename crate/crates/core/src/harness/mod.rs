//! Experiment orchestration: configs, baselines, regret traces and outputs.

mod baselines;
mod bounds;
mod config;
mod emit;
mod run;
mod sweep;

pub use baselines::{WindowLearner, WindowPolicy};
pub use bounds::{lower_bound_reference, reference_curves, BoundsRow, LowerBoundClass};
pub use config::{
    BaselineSpec, ExperimentConfig, OutputSpec, PathSpec, ScheduleSpec, SweepSpec, DEFAULT_CV_GRID,
};
pub use emit::{
    emit_all, median, quantile, summarize, write_json, write_plot_data, write_trace_csv, Emitted,
    LearnerSummary, Quantiles, Summary, TRACE_HEADER,
};
pub use run::{
    evaluate, oracle_boundaries, run_experiment, ExperimentResult, RegretTrace, ReplicationInfo, TraceRow,
};
pub use sweep::{run_sweep, sweep_points, SweepPoint, SweepRow};
