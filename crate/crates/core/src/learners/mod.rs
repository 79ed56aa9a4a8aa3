//! Score-producing binary classifiers with instance-weight support.
//!
//! Every learner maps a feature row to a score in [0, 1]. Weights attached
//! to the training [`Dataset`] multiply each row's contribution.

mod logistic;
mod naive_bayes;
mod tree;

pub use logistic::{
    boundary_covariance, fairness_multiplier, fit_fair_logistic, fit_logistic, LinearModel,
    LogisticObjective,
};
pub use naive_bayes::{fit_gaussian_nb, NaiveBayesModel};
pub use tree::{fit_tree_ensemble, Node, Tree, TreeEnsembleModel};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    GaussianNb,
    TreeEnsemble,
    FairLogistic,
}

impl LearnerKind {
    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Logistic | Self::FairLogistic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    None,
    L1 { strength: f64 },
    L2 { strength: f64 },
    /// `strength · (mixing·‖β‖₁ + (1 − mixing)/2·‖β‖²)`
    ElasticNet { strength: f64, mixing: f64 },
}

impl Regularization {
    /// (L1 coefficient, L2 coefficient) of the penalty.
    pub fn split(&self) -> (f64, f64) {
        match *self {
            Self::None => (0.0, 0.0),
            Self::L1 { strength } => (strength, 0.0),
            Self::L2 { strength } => (0.0, strength),
            Self::ElasticNet { strength, mixing } => (strength * mixing, strength * (1.0 - mixing)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::None => "none".into(),
            Self::L1 { strength } => format!("l1({strength})"),
            Self::L2 { strength } => format!("l2({strength})"),
            Self::ElasticNet { strength, mixing } => format!("elastic_net({mixing},{strength})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub regularization: Regularization,
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features considered at each split.
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Logistic,
            regularization: Regularization::None,
            n_trees: 50,
            max_depth: 6,
            feature_fraction: 0.5,
            bootstrap: true,
            tolerance: 1e-6,
            max_iter: 1000,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn logistic(regularization: Regularization) -> Self {
        Self {
            kind: LearnerKind::Logistic,
            regularization,
            ..Self::default()
        }
    }

    pub fn trees(n_trees: usize, max_depth: usize) -> Self {
        Self {
            kind: LearnerKind::TreeEnsemble,
            n_trees,
            max_depth,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (l1, l2) = self.regularization.split();
        if l1 < 0.0 || l2 < 0.0 {
            return Err(Error::Parameter("regularization strengths must be >= 0".into()));
        }
        if let Regularization::ElasticNet { mixing, .. } = self.regularization {
            if !(0.0..=1.0).contains(&mixing) {
                return Err(Error::Parameter("elastic-net mixing outside [0, 1]".into()));
            }
        }
        if self.max_depth == 0 {
            return Err(Error::Parameter("max depth must be >= 1".into()));
        }
        if self.kind == LearnerKind::TreeEnsemble && self.n_trees == 0 {
            return Err(Error::Parameter("tree count must be >= 1".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::Parameter("feature fraction outside (0, 1]".into()));
        }
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(Error::Parameter("tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    /// Short human-readable description used in result tables.
    pub fn label(&self) -> String {
        match self.kind {
            LearnerKind::Logistic | LearnerKind::FairLogistic => self.regularization.label(),
            LearnerKind::GaussianNb => "nb".into(),
            LearnerKind::TreeEnsemble => format!("trees({},{})", self.n_trees, self.max_depth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Linear(LinearModel),
    GaussianNb(NaiveBayesModel),
    Trees(TreeEnsembleModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    /// Fairness parameter used at fit; 0 for fairness-unaware learners.
    pub lambda: f64,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match &self.params {
            ModelParams::Linear(m) => m.coefficients.len(),
            ModelParams::GaussianNb(m) => m.means[0].len(),
            ModelParams::Trees(m) => m.n_features,
        }
    }

    /// Normalized gain importance; `None` for non-tree models.
    pub fn gain_importance(&self) -> Option<&[f64]> {
        match &self.params {
            ModelParams::Trees(m) => Some(&m.importance),
            _ => None,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Fits the learner named by `config.kind`; `lambda` only affects
/// [`LearnerKind::FairLogistic`].
pub fn fit(train: &Dataset, config: &LearnerConfig, lambda: f64) -> Result<TrainedModel> {
    match config.kind {
        LearnerKind::Logistic => fit_logistic(train, config),
        LearnerKind::GaussianNb => fit_gaussian_nb(train),
        LearnerKind::TreeEnsemble => fit_tree_ensemble(train, config),
        LearnerKind::FairLogistic => fit_fair_logistic(train, lambda, config),
    }
}

pub fn predict_scores(model: &TrainedModel, features: ArrayView2<f64>) -> Result<Vec<f64>> {
    if features.ncols() != model.n_features() {
        return Err(Error::Shape {
            expected: model.n_features(),
            got: features.ncols(),
        });
    }
    Ok(match &model.params {
        ModelParams::Linear(m) => m.predict(features),
        ModelParams::GaussianNb(m) => m.predict(features),
        ModelParams::Trees(m) => m.predict(features),
    })
}

pub(crate) fn check_both_classes(train: &Dataset) -> Result<()> {
    let pos = train.labels().iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == train.n() {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_linear_model_scores_half() {
        let model = TrainedModel {
            kind: LearnerKind::Logistic,
            lambda: 0.0,
            params: ModelParams::Linear(LinearModel {
                coefficients: vec![0.0, 0.0],
                intercept: 0.0,
                means: vec![0.0, 0.0],
                scales: vec![1.0, 1.0],
            }),
        };
        let s = predict_scores(&model, array![[1.0, 2.0], [-3.0, 0.5]].view()).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
        assert!(matches!(
            predict_scores(&model, array![[1.0]].view()),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn sigmoid_linear_formula_oracle() {
        let model = LinearModel {
            coefficients: vec![0.7, -1.3],
            intercept: 0.2,
            means: vec![1.0, -2.0],
            scales: vec![2.0, 0.5],
        };
        let x = array![[0.0, 0.0], [1.0, 1.0], [3.0, -2.0], [-4.0, 7.5], [10.0, -10.0]];
        let got = model.predict(x.view());
        for (i, row) in x.rows().into_iter().enumerate() {
            let eta = 0.2 + 0.7 * (row[0] - 1.0) / 2.0 - 1.3 * (row[1] + 2.0) / 0.5;
            let expected = 1.0 / (1.0 + (-eta).exp());
            assert!((got[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        let bad = LearnerConfig {
            regularization: Regularization::L2 { strength: -1.0 },
            ..LearnerConfig::default()
        };
        assert!(bad.validate().is_err());
        let shallow = LearnerConfig {
            max_depth: 0,
            ..LearnerConfig::default()
        };
        assert!(shallow.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = LearnerConfig {
            regularization: Regularization::ElasticNet { strength: 0.1, mixing: 0.5 },
            ..LearnerConfig::default()
        };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<LearnerConfig>(&text).unwrap(), c);
    }
}
