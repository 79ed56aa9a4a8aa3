//! Tabular data model: features, binary protected attribute, binary target.

mod schema;
mod split;

pub use schema::{
    load_tabular, write_tabular, ColumnKind, DatasetSchema, FeatureColumn, MissingPolicy, PROTECTED_COLUMN,
    TARGET_COLUMN,
};
pub use split::{split, split_indices, SplitIndices, SplitPlan};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Feature matrix with protected attribute `z`, target `y` and optional
/// per-row weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    protected: Vec<u8>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        protected: Vec<u8>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::Input("dataset has no rows".into()));
        }
        if protected.len() != n || labels.len() != n {
            return Err(Error::Input(format!(
                "length mismatch: {} feature rows, {} protected, {} labels",
                n,
                protected.len(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Shape {
                expected: features.ncols(),
                got: feature_names.len(),
            });
        }
        if protected.iter().chain(labels.iter()).any(|&v| v > 1) {
            return Err(Error::Input("protected and labels must be 0/1".into()));
        }
        Ok(Self {
            features,
            protected,
            labels,
            feature_names,
            weights: None,
        })
    }

    /// Returns a copy carrying the given instance weights.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n() {
            return Err(Error::Input(format!(
                "{} weights for {} rows",
                weights.len(),
                self.n()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Input("weights must be strictly positive".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    /// Returns a copy with the feature matrix replaced (same rows).
    pub fn with_features(&self, features: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        if features.nrows() != self.n() {
            return Err(Error::Input(format!(
                "{} feature rows for {} rows",
                features.nrows(),
                self.n()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Shape {
                expected: features.ncols(),
                got: feature_names.len(),
            });
        }
        Ok(Self {
            features,
            feature_names,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn protected(&self) -> &[u8] {
        &self.protected
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn explicit_weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Instance weights, all ones when none were attached.
    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| vec![1.0; self.n()])
    }

    pub fn label_mean(&self) -> f64 {
        self.labels.iter().map(|&y| f64::from(y)).sum::<f64>() / self.n() as f64
    }

    pub fn group_sizes(&self) -> [usize; 2] {
        let ones = self.protected.iter().filter(|&&z| z == 1).count();
        [self.n() - ones, ones]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            protected: rows.iter().map(|&i| self.protected[i]).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            weights: self
                .weights
                .as_ref()
                .map(|w| rows.iter().map(|&i| w[i]).collect()),
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(1), columns),
            feature_names: columns
                .iter()
                .map(|&j| self.feature_names[j].clone())
                .collect(),
            ..self.clone()
        }
    }
}

/// Absolute difference of the target's positive rate between the two groups.
pub fn target_spd(dataset: &Dataset) -> Result<f64> {
    weighted_target_spd(dataset, &vec![1.0; dataset.n()])
}

/// [`target_spd`] with rows weighted by `weights`.
pub fn weighted_target_spd(dataset: &Dataset, weights: &[f64]) -> Result<f64> {
    let mut mass = [0.0f64; 2];
    let mut positive = [0.0f64; 2];
    for ((&z, &y), &w) in dataset.protected().iter().zip(dataset.labels()).zip(weights) {
        mass[z as usize] += w;
        positive[z as usize] += w * f64::from(y);
    }
    for z in 0..2u8 {
        if mass[z as usize] == 0.0 {
            return Err(Error::GroupEmpty(z));
        }
    }
    Ok((positive[1] / mass[1] - positive[0] / mass[0]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(z: Vec<u8>, y: Vec<u8>) -> Dataset {
        let n = z.len();
        Dataset::new(Array2::zeros((n, 1)), z, y, vec!["x".into()]).unwrap()
    }

    #[test]
    fn target_spd_of_independent_labels_is_zero() {
        let ds = toy(vec![0, 0, 1, 1], vec![1, 0, 1, 0]);
        assert_eq!(target_spd(&ds).unwrap(), 0.0);
    }

    #[test]
    fn target_spd_is_symmetric_in_group_coding() {
        let ds = toy(vec![0, 0, 0, 1, 1], vec![1, 0, 0, 1, 1]);
        let flipped = toy(vec![1, 1, 1, 0, 0], vec![1, 0, 0, 1, 1]);
        let a = target_spd(&ds).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a, target_spd(&flipped).unwrap());
    }

    #[test]
    fn target_spd_requires_both_groups() {
        let ds = toy(vec![1, 1], vec![1, 0]);
        assert!(matches!(target_spd(&ds), Err(Error::GroupEmpty(0))));
    }

    #[test]
    fn rejects_bad_weights_and_lengths() {
        let ds = toy(vec![0, 1], vec![1, 0]);
        assert!(ds.clone().with_weights(vec![1.0, 0.0]).is_err());
        assert!(ds.with_weights(vec![1.0]).is_err());
        assert!(Dataset::new(array![[1.0]], vec![0, 1], vec![0], vec!["a".into()]).is_err());
    }
}
