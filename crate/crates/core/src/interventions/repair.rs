use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::is_indicator;
use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Default number of points on the probability grid.
pub const DEFAULT_GRID_SIZE: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureRepair {
    PassThrough,
    Quantiles {
        groups: [Vec<f64>; 2],
        target: Vec<f64>,
    },
}

/// Fitted disparate-impact remover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairModel {
    pub grid: Vec<f64>,
    pub features: Vec<FeatureRepair>,
}

impl RepairModel {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Fully repaired value of `x` in column `j` for a row of group `z`.
    pub fn repaired_value(&self, j: usize, z: u8, x: f64) -> f64 {
        match &self.features[j] {
            FeatureRepair::PassThrough => x,
            FeatureRepair::Quantiles { groups, target } => {
                let u = cdf(&self.grid, &groups[z as usize], x);
                interpolate(&self.grid, target, u)
            }
        }
    }
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], u: f64) -> f64 {
    let pos = u * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Inverse of the piecewise-linear quantile function, clamped to [0, 1].
/// Flat stretches map to the middle of their probability interval.
fn cdf(grid: &[f64], quantiles: &[f64], x: f64) -> f64 {
    let last = quantiles.len() - 1;
    if x < quantiles[0] {
        return 0.0;
    }
    if x > quantiles[last] {
        return 1.0;
    }
    let lo = quantiles.partition_point(|&q| q < x);
    let hi = quantiles.partition_point(|&q| q <= x);
    if lo < hi {
        return 0.5 * (grid[lo] + grid[hi - 1]);
    }
    let (q0, q1) = (quantiles[lo - 1], quantiles[lo]);
    let t = (x - q0) / (q1 - q0);
    grid[lo - 1] + t * (grid[lo] - grid[lo - 1])
}

/// Value of the piecewise-linear function through `(grid, values)` at `u`.
fn interpolate(grid: &[f64], values: &[f64], u: f64) -> f64 {
    let last = grid.len() - 1;
    let pos = (u * last as f64).clamp(0.0, last as f64);
    let lo = (pos.floor() as usize).min(last);
    let hi = (lo + 1).min(last);
    let frac = pos - lo as f64;
    values[lo] + frac * (values[hi] - values[lo])
}

pub fn fit_repairer(train: &Dataset, grid_size: usize) -> Result<RepairModel> {
    if grid_size < 2 {
        return Err(Error::Parameter(format!(
            "repair grid needs at least 2 points, got {grid_size}"
        )));
    }
    let sizes = train.group_sizes();
    for (z, &size) in sizes.iter().enumerate() {
        if size == 0 {
            return Err(Error::GroupEmpty(z as u8));
        }
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|j| j as f64 / (grid_size - 1) as f64)
        .collect();
    let x = train.features();
    let protected = train.protected();
    let features = x
        .columns()
        .into_iter()
        .map(|column| {
            if is_indicator(column.iter()) {
                return FeatureRepair::PassThrough;
            }
            let mut by_group: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for (&v, &z) in column.iter().zip(protected) {
                by_group[z as usize].push(v);
            }
            let groups = by_group.map(|mut values| {
                values.sort_by(f64::total_cmp);
                grid.iter().map(|&u| quantile(&values, u)).collect::<Vec<_>>()
            });
            let target = groups[0]
                .iter()
                .zip(&groups[1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            FeatureRepair::Quantiles { groups, target }
        })
        .collect();
    Ok(RepairModel { grid, features })
}

/// Mixes each numeric value with its repaired counterpart:
/// `(1 - λ)·x + λ·x̃`.
pub fn apply_repair(
    model: &RepairModel,
    features: ArrayView2<f64>,
    protected: &[u8],
    lambda: f64,
) -> Result<Array2<f64>> {
    if features.ncols() != model.n_features() {
        return Err(Error::Shape {
            expected: model.n_features(),
            got: features.ncols(),
        });
    }
    if protected.len() != features.nrows() {
        return Err(Error::Shape {
            expected: features.nrows(),
            got: protected.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("repair level {lambda} outside [0, 1]")));
    }
    let mut out = features.to_owned();
    if lambda == 0.0 {
        return Ok(out);
    }
    for (j, repair) in model.features.iter().enumerate() {
        if matches!(repair, FeatureRepair::PassThrough) {
            continue;
        }
        for (i, value) in out.column_mut(j).iter_mut().enumerate() {
            let repaired = model.repaired_value(j, protected[i], *value);
            *value = (1.0 - lambda) * *value + lambda * repaired;
        }
    }
    Ok(out)
}
