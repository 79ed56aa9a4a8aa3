use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::interventions::{RankWeights, DEFAULT_GRID_SIZE};
use crate::learners::{fit, predict_scores, LearnerConfig, LearnerKind, Regularization};
use crate::metrics::auc;
use crate::seed::{derive_seed, rng};

fn default_repair_grid() -> usize {
    DEFAULT_GRID_SIZE
}

/// Preprocessing step applied before the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Intervention {
    Reweigh,
    Repair {
        #[serde(default = "default_repair_grid")]
        grid_size: usize,
    },
    FeatureSelect {
        k: usize,
        #[serde(default)]
        weights: RankWeights,
    },
}

/// How the fairness parameter acts on a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSemantics {
    Continuous,
    /// Two states switching at λ = 0.5.
    Step,
    /// Fairness-unaware benchmark evaluated at λ = 0 only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub name: String,
    pub learner: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<Intervention>,
    /// Hyperparameter candidates; empty selects the built-in grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<LearnerConfig>,
}

impl Pipeline {
    pub fn new(name: impl Into<String>, learner: LearnerKind) -> Self {
        Self {
            name: name.into(),
            learner,
            intervention: None,
            grid: Vec::new(),
        }
    }

    pub fn with_intervention(mut self, intervention: Intervention) -> Self {
        self.intervention = Some(intervention);
        self
    }

    pub fn with_grid(mut self, grid: Vec<LearnerConfig>) -> Self {
        self.grid = grid;
        self
    }

    pub fn is_fairness_aware(&self) -> bool {
        self.intervention.is_some() || self.learner == LearnerKind::FairLogistic
    }

    pub fn lambda_semantics(&self) -> LambdaSemantics {
        match (&self.intervention, self.learner) {
            (Some(Intervention::Reweigh), _) => LambdaSemantics::Step,
            (Some(_), _) | (None, LearnerKind::FairLogistic) => LambdaSemantics::Continuous,
            (None, _) => LambdaSemantics::None,
        }
    }

    /// Candidate learner configurations, each with `kind` set to the
    /// pipeline's learner.
    pub fn search_grid(&self) -> Vec<LearnerConfig> {
        let grid = if self.grid.is_empty() {
            default_grid(self.learner)
        } else {
            self.grid.clone()
        };
        grid.into_iter()
            .map(|c| LearnerConfig {
                kind: self.learner,
                ..c
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(Error::Config(format!("invalid pipeline name {:?}", self.name)));
        }
        if self.learner == LearnerKind::FairLogistic && self.intervention.is_some() {
            return Err(Error::Config(format!(
                "pipeline `{}` combines an in-training and a preprocessing intervention",
                self.name
            )));
        }
        match &self.intervention {
            Some(Intervention::Repair { grid_size }) if *grid_size < 2 => {
                return Err(Error::Config("repair grid needs at least 2 points".into()))
            }
            Some(Intervention::FeatureSelect { k, weights }) => {
                if *k == 0 {
                    return Err(Error::Config("feature selection needs k >= 1".into()));
                }
                weights.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            _ => {}
        }
        for config in self.search_grid() {
            config.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Built-in hyperparameter grid per learner.
pub fn default_grid(kind: LearnerKind) -> Vec<LearnerConfig> {
    match kind {
        LearnerKind::Logistic | LearnerKind::FairLogistic => [
            Regularization::None,
            Regularization::L1 { strength: 0.1 },
            Regularization::L2 { strength: 0.1 },
            Regularization::L2 { strength: 1.0 },
            Regularization::ElasticNet {
                strength: 0.1,
                mixing: 0.5,
            },
        ]
        .into_iter()
        .map(|r| LearnerConfig {
            kind,
            ..LearnerConfig::logistic(r)
        })
        .collect(),
        LearnerKind::TreeEnsemble => [(50, 3), (50, 6), (200, 3), (200, 6)]
            .into_iter()
            .map(|(trees, depth)| LearnerConfig::trees(trees, depth))
            .collect(),
        LearnerKind::GaussianNb => vec![LearnerConfig {
            kind,
            ..LearnerConfig::default()
        }],
    }
}

/// Fold index of every row; folds are stratified on the label.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut r = rng(seed);
    let mut assignment = vec![0; labels.len()];
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut r);
        for (position, row) in rows.into_iter().enumerate() {
            assignment[row] = position % folds;
        }
    }
    assignment
}

/// Selects the grid point with the highest mean validation AUC under
/// stratified k-fold cross-validation at λ = 0. Ties keep the earlier point.
pub fn tune_hyperparams(pipeline: &Pipeline, train: &Dataset, folds: usize, seed: u64) -> Result<LearnerConfig> {
    let grid = pipeline.search_grid();
    if grid.is_empty() {
        return Err(Error::Tuning(format!("pipeline `{}` has an empty grid", pipeline.name)));
    }
    if folds < 2 {
        return Err(Error::Tuning("cross-validation needs at least 2 folds".into()));
    }
    let fold_of = stratified_folds(train.labels(), folds, seed);
    let partitions: Vec<(Dataset, Dataset)> = (0..folds)
        .map(|f| {
            let (fit_rows, held_rows): (Vec<usize>, Vec<usize>) =
                (0..train.n()).partition(|&i| fold_of[i] != f);
            (train.select_rows(&fit_rows), train.select_rows(&held_rows))
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (index, candidate) in grid.iter().enumerate() {
        let mut total = 0.0;
        let mut used = 0;
        for (f, (fit_part, held)) in partitions.iter().enumerate() {
            let config = LearnerConfig {
                seed: derive_seed(seed, &[index as u64, f as u64]),
                ..candidate.clone()
            };
            let outcome = fit(fit_part, &config, 0.0)
                .and_then(|model| predict_scores(&model, held.features().view()))
                .and_then(|scores| auc::<f64>(&scores, held.labels()));
            match outcome {
                Ok(value) => {
                    total += value;
                    used += 1;
                }
                Err(e) => log::debug!("{}: fold {f} of {} skipped: {e}", pipeline.name, config.label()),
            }
        }
        if used == 0 {
            continue;
        }
        let mean = total / used as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((index, mean));
        }
    }
    let (index, _) = best.ok_or_else(|| {
        Error::Tuning(format!("every fold failed for pipeline `{}`", pipeline.name))
    })?;
    Ok(grid[index].clone())
}
