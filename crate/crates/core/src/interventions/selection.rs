use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::is_indicator;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit_tree_ensemble, LearnerConfig};

/// Number of equal-frequency bins used to discretize numeric features for
/// the mutual-information estimate.
pub const MI_BINS: usize = 10;

/// Weights of the three per-method ranks in the combined rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankWeights {
    pub mi: f64,
    pub f_test: f64,
    pub gain: f64,
}

impl Default for RankWeights {
    fn default() -> Self {
        Self {
            mi: 0.15,
            f_test: 0.15,
            gain: 1.0,
        }
    }
}

impl RankWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mi, self.f_test, self.gain];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || all.iter().all(|&w| w == 0.0) {
            return Err(Error::Parameter(
                "rank weights must be finite, non-negative and not all zero".into(),
            ));
        }
        Ok(())
    }
}

/// Per-feature association scores against one binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub mi: Vec<f64>,
    pub f_test: Vec<f64>,
    pub gain: Vec<f64>,
}

impl FeatureScores {
    /// Weighted sum of the per-method average ranks (1 = most predictive).
    pub fn combined_rank(&self, weights: &RankWeights) -> Vec<f64> {
        let mi = average_ranks(&self.mi);
        let f = average_ranks(&self.f_test);
        let gain = average_ranks(&self.gain);
        (0..mi.len())
            .map(|j| weights.mi * mi[j] + weights.f_test * f[j] + weights.gain * gain[j])
            .collect()
    }
}

fn bins(column: ArrayView1<f64>) -> Vec<usize> {
    if is_indicator(column.iter()) {
        return column.iter().map(|&v| v as usize).collect();
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    column
        .iter()
        .map(|&v| {
            let below = sorted.partition_point(|&s| s < v);
            below * MI_BINS / n
        })
        .collect()
}

/// Plug-in mutual information (nats) between a discretized feature and a
/// binary target.
pub fn mutual_information(column: ArrayView1<f64>, target: &[u8]) -> f64 {
    let binned = bins(column);
    let n_bins = binned.iter().max().map_or(1, |&b| b + 1);
    let mut joint = vec![[0usize; 2]; n_bins];
    for (&b, &t) in binned.iter().zip(target) {
        joint[b][t as usize] += 1;
    }
    let n = target.len() as f64;
    let t_count = [
        joint.iter().map(|c| c[0]).sum::<usize>() as f64,
        joint.iter().map(|c| c[1]).sum::<usize>() as f64,
    ];
    let mut mi = 0.0;
    for cell in &joint {
        let b_count = (cell[0] + cell[1]) as f64;
        for t in 0..2 {
            if cell[t] > 0 {
                let c = cell[t] as f64;
                mi += c / n * (c * n / (b_count * t_count[t])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// One-way ANOVA F statistic of a feature across the two target classes.
/// Zero within-class variance yields `+∞` when the class means differ.
pub fn f_statistic(column: ArrayView1<f64>, target: &[u8]) -> f64 {
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for (&v, &t) in column.iter().zip(target) {
        sum[t as usize] += v;
        count[t as usize] += 1;
    }
    if count[0] == 0 || count[1] == 0 {
        return 0.0;
    }
    let n = (count[0] + count[1]) as f64;
    let mean = [sum[0] / count[0] as f64, sum[1] / count[1] as f64];
    let grand = (sum[0] + sum[1]) / n;
    let between: f64 = (0..2)
        .map(|c| count[c] as f64 * (mean[c] - grand).powi(2))
        .sum();
    let within: f64 = column
        .iter()
        .zip(target)
        .map(|(&v, &t)| (v - mean[t as usize]).powi(2))
        .sum();
    if within <= 0.0 {
        return if between > 0.0 { f64::INFINITY } else { 0.0 };
    }
    between / (within / (n - 2.0))
}

/// Average ranks in descending order of score: the largest score gets rank 1
/// and tied scores share the mean of their positions.
pub fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// MI, F and tree-ensemble gain importance of every column against `target`.
pub fn feature_scores(features: &Array2<f64>, target: &[u8], seed: u64) -> Result<FeatureScores> {
    let d = features.ncols();
    let mi = features
        .columns()
        .into_iter()
        .map(|c| mutual_information(c, target))
        .collect();
    let f_test = features
        .columns()
        .into_iter()
        .map(|c| f_statistic(c, target))
        .collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let other = vec![0u8; target.len()];
    let scoring = Dataset::new(features.clone(), other, target.to_vec(), names)?;
    let config = LearnerConfig {
        seed,
        ..LearnerConfig::trees(50, 6)
    };
    let model = fit_tree_ensemble(&scoring, &config)?;
    let gain = model
        .gain_importance()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; d]);
    Ok(FeatureScores { mi, f_test, gain })
}

/// Combined ranks of every column against the target and against the
/// protected attribute. Either side may be skipped when the λ values of
/// interest never weight it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRanks {
    pub target: Option<Vec<f64>>,
    pub protected: Option<Vec<f64>>,
}

impl SelectionRanks {
    pub fn compute(
        train: &Dataset,
        weights: &RankWeights,
        seed: u64,
        target: bool,
        protected: bool,
    ) -> Result<Self> {
        weights.validate()?;
        let rank = |t: &[u8]| -> Result<Vec<f64>> {
            Ok(feature_scores(train.features(), t, seed)?.combined_rank(weights))
        };
        Ok(Self {
            target: if target { Some(rank(train.labels())?) } else { None },
            protected: if protected { Some(rank(train.protected())?) } else { None },
        })
    }

    /// Indices of the `k` best columns at fairness level `λ`:
    /// ascending `(1 − λ)·R_y + λ·((d + 1) − R_z)`, ties by column order.
    pub fn select(&self, k: usize, lambda: f64) -> Result<Vec<usize>> {
        let d = self
            .target
            .as_ref()
            .or(self.protected.as_ref())
            .map_or(0, Vec::len);
        if k == 0 || k > d {
            return Err(Error::Parameter(format!("cannot select {k} of {d} features")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Parameter(format!("selection level {lambda} outside [0, 1]")));
        }
        let missing = |side: &str| Error::Parameter(format!("{side} ranks were not computed"));
        let mut score = vec![0.0; d];
        if lambda < 1.0 {
            let r_y = self.target.as_ref().ok_or_else(|| missing("target"))?;
            for (s, r) in score.iter_mut().zip(r_y) {
                *s += (1.0 - lambda) * r;
            }
        }
        if lambda > 0.0 {
            let r_z = self.protected.as_ref().ok_or_else(|| missing("protected"))?;
            for (s, r) in score.iter_mut().zip(r_z) {
                *s += lambda * ((d as f64 + 1.0) - r);
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
        order.truncate(k);
        Ok(order)
    }
}

/// Indices of the `k` best columns under the λ-weighted combination of
/// target predictiveness and inverse protected-attribute predictiveness.
///
/// At `λ = 0` only the ranking against `y` matters; at `λ = 1` the columns
/// least predictive of `z` come first.
pub fn fair_feature_select(
    train: &Dataset,
    k: usize,
    lambda: f64,
    weights: &RankWeights,
    seed: u64,
) -> Result<Vec<usize>> {
    let d = train.d();
    if k == 0 || k > d {
        return Err(Error::Parameter(format!("cannot select {k} of {d} features")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("selection level {lambda} outside [0, 1]")));
    }
    SelectionRanks::compute(train, weights, seed, lambda < 1.0, lambda > 0.0)?.select(k, lambda)
}
