//! Row types of the result files and CSV helpers.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::sweep::Split;
use crate::error::{Error, Result};
use crate::policies::PolicyKind;

pub const RECORDS: &str = "records.csv";
pub const SURFACES: &str = "surfaces.csv";
pub const EFFICIENCIES: &str = "efficiencies.csv";
pub const RESOLUTIONS: &str = "resolutions.csv";
pub const POLICY_METRICS: &str = "policy_metrics.csv";
pub const BUDGETS: &str = "budgets.csv";
pub const SUMMARY: &str = "summary.csv";
pub const REACHABILITY: &str = "reachability.csv";
pub const FAILURES: &str = "failures.csv";
pub const TIMINGS: &str = "timings.csv";
pub const RUN_CONFIG: &str = "config.toml";

/// Long-form surface cell; `tau` is empty for AUC-by-λ rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub split: Split,
    pub metric: String,
    pub lambda_mode: String,
    pub lambda: f64,
    pub tau: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub lambda_mode: String,
    pub k_auc: f64,
    pub k_di: f64,
    pub k_eo: f64,
    pub theta_di: f64,
    pub theta_eo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRecord {
    pub dataset: String,
    pub pipeline: String,
    pub policy: PolicyKind,
    pub lambda: f64,
    pub tau: Option<f64>,
    pub dropped: bool,
    pub reason: String,
    pub mean_acceptance: Option<f64>,
}

impl Default for ResolutionRecord {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            pipeline: String::new(),
            policy: PolicyKind::Argmax,
            lambda: 0.0,
            tau: None,
            dropped: false,
            reason: String::new(),
            mean_acceptance: None,
        }
    }
}

/// Metrics of one (λ, repetition, split) at the threshold chosen by a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetricRecord {
    pub dataset: String,
    pub pipeline: String,
    pub policy: PolicyKind,
    pub lambda: f64,
    pub tau: f64,
    pub repetition: usize,
    pub split: Split,
    pub accuracy: f64,
    pub precision: f64,
    pub di: f64,
    pub eo: f64,
    pub spd: f64,
    pub acceptance: f64,
    pub auc: f64,
}

impl Default for PolicyMetricRecord {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            pipeline: String::new(),
            policy: PolicyKind::Argmax,
            lambda: 0.0,
            tau: 0.0,
            repetition: 0,
            split: Split::Train,
            accuracy: 0.0,
            precision: 0.0,
            di: 0.0,
            eo: 0.0,
            spd: 0.0,
            acceptance: 0.0,
            auc: 0.0,
        }
    }
}

/// Fairness-budget choice with mean test metrics at the chosen λ and at λ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRecord {
    pub dataset: String,
    pub pipeline: String,
    pub policy: PolicyKind,
    pub lambda: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub test_di: Option<f64>,
    pub test_eo: Option<f64>,
    pub test_accuracy_off: Option<f64>,
    pub test_di_off: Option<f64>,
    pub test_eo_off: Option<f64>,
}

impl Default for BudgetRecord {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            pipeline: String::new(),
            policy: PolicyKind::Argmax,
            lambda: None,
            test_accuracy: None,
            test_di: None,
            test_eo: None,
            test_accuracy_off: None,
            test_di_off: None,
            test_eo_off: None,
        }
    }
}

/// Per dataset, pipeline and policy: repetition-averaged test metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub dataset: String,
    pub pipeline: String,
    pub fairness_aware: bool,
    pub policy: PolicyKind,
    pub status: String,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub di: Option<f64>,
    pub eo: Option<f64>,
    pub theta_di: Option<f64>,
    pub theta_eo: Option<f64>,
}

impl Default for SummaryRecord {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            pipeline: String::new(),
            fairness_aware: false,
            policy: PolicyKind::Argmax,
            status: String::new(),
            lambda: None,
            tau: None,
            accuracy: None,
            precision: None,
            di: None,
            eo: None,
            theta_di: None,
            theta_eo: None,
        }
    }
}

/// Best repetition-averaged test DI at the argmax threshold over all
/// fairness-aware pipelines and λ values of a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityRecord {
    pub dataset: String,
    pub reachable: bool,
    pub pipeline: String,
    pub lambda: Option<f64>,
    pub di: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: Option<usize>,
    pub lambda: Option<f64>,
    /// True when the failure excluded the whole pipeline.
    pub fatal: bool,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub lambda: f64,
    pub fit_seconds: f64,
}

fn headers<T: Serialize + Default>() -> Result<csv::StringRecord> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(T::default())?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(bytes.as_slice());
    Ok(r.records().next().expect("header row")?)
}

/// Writes `rows` with a header line, even when there are no rows.
pub fn write_table<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(&headers::<T>()?)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_keep_their_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table::<BudgetRecord>(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.trim(),
            "dataset,pipeline,policy,lambda,test_accuracy,test_di,test_eo,test_accuracy_off,test_di_off,test_eo_off"
        );
        assert!(read_table::<BudgetRecord>(&path).unwrap().is_empty());
    }

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            SummaryRecord {
                dataset: "d".into(),
                pipeline: "p".into(),
                policy: PolicyKind::PolicyFree,
                status: "ok".into(),
                theta_di: Some(0.25),
                ..SummaryRecord::default()
            },
            SummaryRecord {
                policy: PolicyKind::Ppr,
                lambda: Some(0.1),
                ..SummaryRecord::default()
            },
        ];
        write_table(&path, &rows).unwrap();
        assert_eq!(read_table::<SummaryRecord>(&path).unwrap(), rows);
    }
}
