//! Workload configs, experiment orchestration and report output.

mod emit;
mod plan;
mod run;

pub use emit::{csv_to_json, emit_report, json_to_csv, render_report, ReportFormat};
pub use plan::{load_plan, parse_workload, parse_workload_str, CalibrationSource, InputSpec, ModelShape, RunPlan};
pub use run::{
    compare_designs, compare_runs, execute, execute_pair, resolve_calibration, run_experiment, ComparisonReport, FunctionalStats,
    Reduction, Run, RunResult, COMPARE_SCHEMA, RUN_SCHEMA,
};
