//! Bagged Gini decision trees with gain importance.
//!
//! Split candidates come from per-feature thresholds computed once per fit:
//! midpoints between consecutive distinct values when a feature has at most
//! `MAX_BINS` of them, otherwise midpoints at equal-weight cut positions.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, LearnerConfig, LearnerKind, ModelParams, TrainedModel};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

const MAX_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Impurity decrease per feature, normalized to sum to one.
    pub importance: Vec<f64>,
}

impl TreeEnsembleModel {
    pub fn from_trees(n_features: usize, trees: Vec<Tree>) -> Self {
        let importance = normalized_importance(&trees, n_features);
        Self {
            n_features,
            trees,
            importance,
        }
    }

    pub fn predict(&self, features: ArrayView2<f64>) -> Vec<f64> {
        features
            .rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                self.trees.iter().map(|t| t.score(&row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

fn normalized_importance(trees: &[Tree], d: usize) -> Vec<f64> {
    let mut imp = vec![0.0; d];
    for node in trees.iter().flat_map(|t| &t.nodes) {
        if let Node::Split { feature, gain, .. } = *node {
            imp[feature] += gain;
        }
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        imp.iter_mut().for_each(|v| *v /= total);
    } else if d > 0 {
        imp.fill(1.0 / d as f64);
    }
    imp
}

pub fn fit_tree_ensemble(train: &Dataset, config: &LearnerConfig) -> Result<TrainedModel> {
    config.validate()?;
    if train.n() < 2 {
        return Err(Error::Input("need at least two rows".into()));
    }
    check_both_classes(train)?;
    let d = train.d();
    let weights = train.weights();
    let binned = Binned::new(train.features(), &weights);
    let labels: Vec<f64> = train.labels().iter().map(|&y| f64::from(y)).collect();
    let n_candidates = ((config.feature_fraction * d as f64).round() as usize).clamp(1, d.max(1));

    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = rng(derive_seed(config.seed, &[t as u64]));
            let mut row_weights = weights.clone();
            if config.bootstrap {
                let mut counts = vec![0u32; train.n()];
                for _ in 0..train.n() {
                    counts[rng.random_range(0..train.n())] += 1;
                }
                for (w, c) in row_weights.iter_mut().zip(counts) {
                    *w *= f64::from(c);
                }
            }
            let rows: Vec<usize> = (0..train.n()).filter(|&i| row_weights[i] > 0.0).collect();
            let mut builder = Builder {
                binned: &binned,
                labels: &labels,
                weights: &row_weights,
                max_depth: config.max_depth,
                n_candidates,
                rng: &mut rng,
                nodes: Vec::new(),
            };
            builder.grow(rows, 0);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(TrainedModel {
        kind: LearnerKind::TreeEnsemble,
        lambda: 0.0,
        params: ModelParams::Trees(TreeEnsembleModel::from_trees(d, trees)),
    })
}

struct Binned {
    thresholds: Vec<Vec<f64>>,
    /// Row-major bin index per cell: number of thresholds strictly below the value.
    bins: Array2<u16>,
}

impl Binned {
    fn new(x: &Array2<f64>, weights: &[f64]) -> Self {
        let (n, d) = x.dim();
        let total: f64 = weights.iter().sum();
        let mut thresholds = Vec::with_capacity(d);
        let mut bins = Array2::<u16>::zeros((n, d));
        for (j, col) in x.columns().into_iter().enumerate() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            // distinct values with their accumulated weight
            let mut distinct: Vec<(f64, f64)> = Vec::new();
            for &i in &order {
                match distinct.last_mut() {
                    Some((v, w)) if *v == col[i] => *w += weights[i],
                    _ => distinct.push((col[i], weights[i])),
                }
            }
            let cuts: Vec<f64> = if distinct.len() <= MAX_BINS {
                distinct.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)).collect()
            } else {
                let mut cumulative = Vec::with_capacity(distinct.len());
                let mut acc = 0.0;
                for &(_, w) in &distinct {
                    acc += w;
                    cumulative.push(acc);
                }
                let mut c: Vec<f64> = (1..MAX_BINS)
                    .filter_map(|k| {
                        let target = k as f64 * total / MAX_BINS as f64;
                        let g = cumulative.partition_point(|&c| c < target);
                        (g + 1 < distinct.len()).then(|| 0.5 * (distinct[g].0 + distinct[g + 1].0))
                    })
                    .collect();
                c.dedup();
                c
            };
            for (i, &v) in col.iter().enumerate() {
                bins[[i, j]] = cuts.partition_point(|&t| t < v) as u16;
            }
            thresholds.push(cuts);
        }
        Self { thresholds, bins }
    }
}

struct Builder<'a, R: Rng> {
    binned: &'a Binned,
    labels: &'a [f64],
    weights: &'a [f64],
    max_depth: usize,
    n_candidates: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

/// Weighted Gini impurity times node weight: `W · 2p(1 − p)`.
fn weighted_gini(w: f64, wy: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let p = wy / w;
    w * 2.0 * p * (1.0 - p)
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (w, wy) = rows.iter().fold((0.0, 0.0), |(a, b), &i| {
            (a + self.weights[i], b + self.weights[i] * self.labels[i])
        });
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: wy / w });
        if depth >= self.max_depth || wy <= 0.0 || wy >= w {
            return id;
        }
        let Some((feature, bin, gain)) = self.best_split(&rows, w, wy) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| (self.binned.bins[[i, feature]] as usize) <= bin);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold: self.binned.thresholds[feature][bin],
            gain,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], w: f64, wy: f64) -> Option<(usize, usize, f64)> {
        let d = self.binned.thresholds.len();
        let mut candidates = sample(self.rng, d, self.n_candidates).into_vec();
        candidates.sort_unstable();
        let parent = weighted_gini(w, wy);
        let mut best: Option<(usize, usize, f64)> = None;
        for feature in candidates {
            let n_cuts = self.binned.thresholds[feature].len();
            if n_cuts == 0 {
                continue;
            }
            let mut hist_w = vec![0.0; n_cuts + 1];
            let mut hist_wy = vec![0.0; n_cuts + 1];
            for &i in rows {
                let b = self.binned.bins[[i, feature]] as usize;
                hist_w[b] += self.weights[i];
                hist_wy[b] += self.weights[i] * self.labels[i];
            }
            let (mut lw, mut lwy) = (0.0, 0.0);
            for bin in 0..n_cuts {
                lw += hist_w[bin];
                lwy += hist_wy[bin];
                let rw = w - lw;
                if lw <= 0.0 || rw <= 1e-12 * w {
                    continue;
                }
                let gain = parent - weighted_gini(lw, lwy) - weighted_gini(rw, wy - lwy);
                if gain > 1e-12 * w && best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((feature, bin, gain));
                }
            }
        }
        best
    }
}
