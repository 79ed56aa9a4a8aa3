//! Weighted Gaussian naive Bayes.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, sigmoid, LearnerKind, ModelParams, TrainedModel};
use crate::datasets::Dataset;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// Class priors, indexed by label.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    fn log_likelihood(&self, class: usize, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.means[class])
            .zip(&self.variances[class])
            .map(|((&x, &m), &v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v))
            .sum::<f64>()
            + self.priors[class].ln()
    }

    /// Posterior P(y = 1 | x).
    pub fn predict(&self, features: ArrayView2<f64>) -> Vec<f64> {
        features
            .rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                sigmoid(self.log_likelihood(1, &row) - self.log_likelihood(0, &row))
            })
            .collect()
    }
}

pub fn fit_gaussian_nb(train: &Dataset) -> Result<TrainedModel> {
    check_both_classes(train)?;
    let weights = train.weights();
    let x = train.features();
    let d = train.d();
    let total: f64 = weights.iter().sum();

    let mut mass = [0.0f64; 2];
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for (i, row) in x.rows().into_iter().enumerate() {
        let c = train.labels()[i] as usize;
        mass[c] += weights[i];
        for (m, &v) in means[c].iter_mut().zip(row.iter()) {
            *m += weights[i] * v;
        }
    }
    for c in 0..2 {
        means[c].iter_mut().for_each(|m| *m /= mass[c]);
    }
    let mut variances = [vec![0.0; d], vec![0.0; d]];
    for (i, row) in x.rows().into_iter().enumerate() {
        let c = train.labels()[i] as usize;
        for j in 0..d {
            let e = row[j] - means[c][j];
            variances[c][j] += weights[i] * e * e;
        }
    }

    let max_global_var = x
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.iter().zip(&weights).map(|(&v, &w)| w * v).sum::<f64>() / total;
            col.iter()
                .zip(&weights)
                .map(|(&v, &w)| w * (v - mean) * (v - mean))
                .sum::<f64>()
                / total
        })
        .fold(0.0f64, f64::max);
    let floor = 1e-9 * if max_global_var > 0.0 { max_global_var } else { 1.0 };
    for c in 0..2 {
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / mass[c]).max(floor));
    }

    Ok(TrainedModel {
        kind: LearnerKind::GaussianNb,
        lambda: 0.0,
        params: ModelParams::GaussianNb(NaiveBayesModel {
            priors: [mass[0] / total, mass[1] / total],
            means,
            variances,
        }),
    })
}
