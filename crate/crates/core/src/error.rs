use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("column `{column}` maps to {distinct} distinct values, expected 2")]
    Cardinality { column: String, distinct: usize },
    #[error("input error: {0}")]
    Input(String),
    #[error("protected group z={0} is empty")]
    GroupEmpty(u8),
    #[error("true positive rate undefined: group z={0} has no positive labels")]
    UndefinedTpr(u8),
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("grid error: {0}")]
    Grid(String),
    #[error("synthetic spec error: {0}")]
    Spec(String),
    #[error("calibration did not converge (prevalence residual {prevalence_residual:.4}, spd residual {spd_residual:.4})")]
    Calibration {
        prevalence_residual: f64,
        spd_residual: f64,
    },
    #[error("optimizer did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("shape mismatch: expected {expected} columns, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("(y={y}, z={z}) cell is empty")]
    CellEmpty { y: u8, z: u8 },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("tuning error: {0}")]
    Tuning(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("pipeline `{pipeline}` failed: {reason}")]
    PipelineFailure { pipeline: String, reason: String },
    #[error("not found: {0}")]
    NotFound(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by invalid configuration or inputs rather than
    /// by a failure while running a pipeline.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Self::Config(_)
                | Self::Schema(_)
                | Self::Spec(_)
                | Self::Grid(_)
                | Self::Parameter(_)
                | Self::NotFound(_)
                | Self::Cardinality { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
