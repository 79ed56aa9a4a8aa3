use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{Intervention, Pipeline};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::faireff::{fair_efficiency, k_auc, k_integral, AucCurve, FairEfficiency, LambdaMode, MetricSurface};
use crate::interventions::{apply_repair, fit_repairer, reweigh_with_lambda, RepairModel, SelectionRanks};
use crate::learners::{fit, predict_scores, LearnerConfig};
use crate::metrics::{auc, brier, confusion_by_group, ThresholdMetrics};
use crate::seed::{derive_seed, name_tag};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
}

impl Split {
    pub const BOTH: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
        }
    }
}

/// Coordinates of one repetition of one pipeline on one dataset, from which
/// every seed of the sweep is derived.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub dataset: String,
    pub dataset_index: usize,
    pub repetition: usize,
    pub master_seed: u64,
}

impl SweepContext {
    pub fn cell_seed(&self, pipeline: &str, lambda_index: usize) -> u64 {
        derive_seed(
            self.master_seed,
            &[
                self.dataset_index as u64,
                self.repetition as u64,
                name_tag(pipeline),
                lambda_index as u64,
            ],
        )
    }

    pub fn intervention_seed(&self, pipeline: &str) -> u64 {
        derive_seed(
            self.master_seed,
            &[
                self.dataset_index as u64,
                self.repetition as u64,
                name_tag(pipeline),
                name_tag("intervention"),
            ],
        )
    }

    /// Shared by every pipeline so that all of them see the same folds.
    pub fn tuning_seed(&self) -> u64 {
        derive_seed(
            self.master_seed,
            &[self.dataset_index as u64, self.repetition as u64, name_tag("tuning")],
        )
    }
}

/// One row of the raw results table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub lambda: f64,
    pub tau: f64,
    pub split: Split,
    pub accuracy: f64,
    pub precision: f64,
    pub tpr_0: f64,
    pub tpr_1: f64,
    pub positive_rate_0: f64,
    pub positive_rate_1: f64,
    /// Overall positive-prediction rate.
    pub acceptance: f64,
    pub di: f64,
    pub eo: f64,
    pub spd: f64,
    pub auc: f64,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub metrics: ThresholdMetrics<f64>,
    pub acceptance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvaluation {
    pub auc: f64,
    pub brier: f64,
    /// One row per τ on the grid.
    pub thresholds: Vec<ThresholdRow>,
}

/// Outcome of one λ value: both splits evaluated on the full τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub lambda_index: usize,
    pub lambda: f64,
    pub fit_seconds: f64,
    /// Indexed by [`Split`] order: train, test.
    pub splits: [SplitEvaluation; 2],
}

impl CellResult {
    pub fn split(&self, split: Split) -> &SplitEvaluation {
        &self.splits[split as usize]
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub pipeline: String,
    pub lambda_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub single_point: bool,
    /// One entry per λ; failures carry the error message.
    pub cells: Vec<std::result::Result<CellResult, String>>,
}

/// Metric surfaces of one split of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSurfaces {
    pub accuracy: MetricSurface<f64>,
    pub precision: MetricSurface<f64>,
    pub di: MetricSurface<f64>,
    pub eo: MetricSurface<f64>,
    pub auc: AucCurve<f64>,
}

impl SplitSurfaces {
    pub fn named(&self) -> [(&'static str, &MetricSurface<f64>); 4] {
        [
            ("accuracy", &self.accuracy),
            ("precision", &self.precision),
            ("di", &self.di),
            ("eo", &self.eo),
        ]
    }
}

impl SweepOutput {
    pub fn successes(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter_map(|c| c.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, &str)> {
        self.lambda_grid
            .iter()
            .zip(&self.cells)
            .filter_map(|(&l, c)| c.as_ref().err().map(|e| (l, e.as_str())))
    }

    pub fn records(&self, context: &SweepContext) -> Vec<ExperimentRecord> {
        let mut out = Vec::new();
        for cell in self.successes() {
            for split in Split::BOTH {
                let eval = cell.split(split);
                for (row, &tau) in eval.thresholds.iter().zip(&self.tau_grid) {
                    let m = &row.metrics;
                    out.push(ExperimentRecord {
                        dataset: context.dataset.clone(),
                        pipeline: self.pipeline.clone(),
                        repetition: context.repetition,
                        lambda: cell.lambda,
                        tau,
                        split,
                        accuracy: m.accuracy,
                        precision: m.precision,
                        tpr_0: m.tpr[0],
                        tpr_1: m.tpr[1],
                        positive_rate_0: m.positive_rate[0],
                        positive_rate_1: m.positive_rate[1],
                        acceptance: row.acceptance,
                        di: m.di,
                        eo: m.eo,
                        spd: m.spd,
                        auc: eval.auc,
                        brier: eval.brier,
                    });
                }
            }
        }
        out
    }

    /// λ-integration rule for the surfaces: single point for benchmarks,
    /// continuous when both grid endpoints survived, otherwise a uniform
    /// mean over the surviving λ values.
    pub fn lambda_mode(&self) -> LambdaMode {
        if self.single_point {
            return LambdaMode::SinglePoint;
        }
        let ok = |i: usize| self.cells.get(i).is_some_and(|c| c.is_ok());
        if ok(0) && ok(self.cells.len() - 1) {
            LambdaMode::Continuous
        } else {
            LambdaMode::DiscreteWeighted
        }
    }

    pub fn surfaces(&self, split: Split) -> Result<SplitSurfaces> {
        let cells: Vec<&CellResult> = self.successes().collect();
        if cells.is_empty() {
            return Err(Error::PipelineFailure {
                pipeline: self.pipeline.clone(),
                reason: "no λ value completed".into(),
            });
        }
        let mode = self.lambda_mode();
        let lambdas: Vec<f64> = cells.iter().map(|c| c.lambda).collect();
        let surface = |f: &dyn Fn(&ThresholdRow) -> f64| {
            let values = cells
                .iter()
                .flat_map(|c| c.split(split).thresholds.iter().map(f))
                .collect();
            MetricSurface::new(lambdas.clone(), self.tau_grid.clone(), values, mode)
        };
        Ok(SplitSurfaces {
            accuracy: surface(&|r| r.metrics.accuracy)?,
            precision: surface(&|r| r.metrics.precision)?,
            di: surface(&|r| r.metrics.di)?,
            eo: surface(&|r| r.metrics.eo)?,
            auc: AucCurve::new(lambdas.clone(), cells.iter().map(|c| c.split(split).auc).collect(), mode)?,
        })
    }
}

/// `(Θ_{AUC,DI}, Θ_{AUC,EO})` from test-split surfaces.
pub fn compute_efficiencies(test: &SplitSurfaces) -> Result<(FairEfficiency<f64>, FairEfficiency<f64>)> {
    let k_p = k_auc(&test.auc);
    Ok((
        fair_efficiency(k_p, k_integral(&test.di))?,
        fair_efficiency(k_p, k_integral(&test.eo))?,
    ))
}

/// λ-independent state of an intervention, fitted once per repetition.
enum Prepared {
    None,
    Reweigh,
    Repair(RepairModel),
    Select { ranks: SelectionRanks, k: usize },
}

fn prepare(pipeline: &Pipeline, train: &Dataset, lambdas: &[f64], seed: u64) -> Result<Prepared> {
    Ok(match &pipeline.intervention {
        None => Prepared::None,
        Some(Intervention::Reweigh) => Prepared::Reweigh,
        Some(Intervention::Repair { grid_size }) => Prepared::Repair(fit_repairer(train, *grid_size)?),
        Some(Intervention::FeatureSelect { k, weights }) => Prepared::Select {
            ranks: SelectionRanks::compute(
                train,
                weights,
                seed,
                lambdas.iter().any(|&l| l < 1.0),
                lambdas.iter().any(|&l| l > 0.0),
            )?,
            k: *k,
        },
    })
}

/// Training set for fitting plus the train and test sets to evaluate.
fn intervene(prepared: &Prepared, train: &Dataset, test: &Dataset, lambda: f64) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(match prepared {
        Prepared::None => (train.clone(), train.clone(), test.clone()),
        Prepared::Reweigh => {
            let weights = reweigh_with_lambda(train, lambda)?;
            (train.clone().with_weights(weights)?, train.clone(), test.clone())
        }
        Prepared::Repair(model) => {
            let repair = |d: &Dataset| -> Result<Dataset> {
                let x = apply_repair(model, d.features().view(), d.protected(), lambda)?;
                d.with_features(x, d.feature_names().to_vec())
            };
            let repaired = repair(train)?;
            (repaired.clone(), repaired, repair(test)?)
        }
        Prepared::Select { ranks, k } => {
            let columns = ranks.select(*k, lambda)?;
            let selected = train.select_columns(&columns);
            (selected.clone(), selected, test.select_columns(&columns))
        }
    })
}

fn evaluate(scores: &[f64], data: &Dataset, tau_grid: &[f64]) -> Result<SplitEvaluation> {
    let thresholds = tau_grid
        .iter()
        .map(|&tau| {
            let c = confusion_by_group(data.labels(), data.protected(), scores, tau)?;
            let all = c.overall();
            Ok(ThresholdRow {
                metrics: ThresholdMetrics::from_confusion(&c)?,
                acceptance: all.predicted_positive() as f64 / all.total() as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SplitEvaluation {
        auc: auc(scores, data.labels())?,
        brier: brier(scores, data.labels())?,
        thresholds,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    pipeline: &Pipeline,
    prepared: &Prepared,
    train: &Dataset,
    test: &Dataset,
    tuned: &LearnerConfig,
    tau_grid: &[f64],
    lambda_index: usize,
    lambda: f64,
    seed: u64,
) -> Result<CellResult> {
    let (fit_set, train_eval, test_eval) = intervene(prepared, train, test, lambda)?;
    let config = LearnerConfig {
        kind: pipeline.learner,
        seed,
        ..tuned.clone()
    };
    let start = Instant::now();
    let model = fit(&fit_set, &config, lambda)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let train_scores = predict_scores(&model, train_eval.features().view())?;
    let test_scores = predict_scores(&model, test_eval.features().view())?;
    Ok(CellResult {
        lambda_index,
        lambda,
        fit_seconds,
        splits: [
            evaluate(&train_scores, &train_eval, tau_grid)?,
            evaluate(&test_scores, &test_eval, tau_grid)?,
        ],
    })
}

/// Evaluates one repetition of a pipeline over the λ grid (λ = 0 only for
/// benchmarks) and the full τ grid on both splits. Interventions are fitted
/// on `train` and applied to both splits. Per-λ failures are kept in the
/// output rather than aborting the sweep.
pub fn run_sweep(
    pipeline: &Pipeline,
    train: &Dataset,
    test: &Dataset,
    tuned: &LearnerConfig,
    lambda_grid: &[f64],
    tau_grid: &[f64],
    context: &SweepContext,
) -> SweepOutput {
    let single_point = !pipeline.is_fairness_aware();
    let lambdas = if single_point {
        vec![0.0]
    } else {
        lambda_grid.to_vec()
    };
    let prepared = prepare(pipeline, train, &lambdas, context.intervention_seed(&pipeline.name));
    let cells = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let prepared = prepared.as_ref().map_err(|e| e.to_string())?;
            let seed = context.cell_seed(&pipeline.name, i);
            run_cell(pipeline, prepared, train, test, tuned, tau_grid, i, lambda, seed).map_err(|e| {
                log::warn!(
                    "{} / {} rep {} λ={lambda}: {e}",
                    context.dataset,
                    pipeline.name,
                    context.repetition
                );
                e.to_string()
            })
        })
        .collect();
    SweepOutput {
        pipeline: pipeline.name.clone(),
        lambda_grid: lambdas,
        tau_grid: tau_grid.to_vec(),
        single_point,
        cells,
    }
}
