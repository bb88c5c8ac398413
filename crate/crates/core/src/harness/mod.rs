//! Experiment orchestration: configuration, multi-run aggregation, reports,
//! the quick check tier and the command line interface.

pub mod check;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod report;

pub use check::{run_quick_checks, CheckOutcome};
pub use cli::{cli_main, EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION};
pub use config::{
    ExperimentConfig, NetworkOverrides, OracleKind, OracleSpec, ProblemOverrides, ReferenceMode,
    TrainingOverrides, OUTPUT_DIR_ENV,
};
pub use experiment::{
    resolve_reference, run_experiment, run_oracle, run_stream, solve_preset, ExperimentOutcome,
    OracleResult, RunRecord,
};
pub use report::{emit_report, from_csv, to_csv, to_markdown, ReportFormat, ResultRow};
