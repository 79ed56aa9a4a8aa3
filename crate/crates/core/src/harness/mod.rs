//! End-to-end evaluation: per repetition, tune the learner by
//! cross-validated AUC at λ = 0, sweep λ and τ, assemble metric surfaces,
//! integrate them into fair efficiencies, resolve threshold policies and
//! fairness budgets, and write the result tables.

mod config;
mod experiment;
mod pipeline;
mod report;
mod sweep;
pub mod tables;

pub use config::{DatasetConfig, ExperimentConfig};
pub use experiment::{run_experiment, RunOutcome};
pub use pipeline::{default_grid, stratified_folds, tune_hyperparams, Intervention, LambdaSemantics, Pipeline};
pub use report::{build_report, emit_report, BenchmarkRow, BoxRow, Report, ReportFormat, ScatterRow, ThetaRow, UpliftRow};
pub use sweep::{
    compute_efficiencies, run_sweep, CellResult, ExperimentRecord, Split, SplitEvaluation, SplitSurfaces,
    SweepContext, SweepOutput, ThresholdRow,
};
