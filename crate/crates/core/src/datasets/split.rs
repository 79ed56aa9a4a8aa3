//! Repeated train/test splits stratified on the joint (y, z) cell.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_proportion: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(train_proportion: f64, repetitions: usize, seed: u64) -> Result<Self> {
        let plan = Self {
            train_proportion,
            repetitions,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_proportion > 0.0 && self.train_proportion < 1.0) {
            return Err(Error::Parameter(format!(
                "train proportion {} outside (0, 1)",
                self.train_proportion
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Parameter("repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// Row indices of one repetition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(dataset: &Dataset, plan: &SplitPlan) -> Result<Vec<(Dataset, Dataset)>> {
    Ok(split_indices(dataset, plan)?
        .into_iter()
        .map(|s| (dataset.select_rows(&s.train), dataset.select_rows(&s.test)))
        .collect())
}

pub fn split_indices(dataset: &Dataset, plan: &SplitPlan) -> Result<Vec<SplitIndices>> {
    plan.validate()?;
    let mut cells: [Vec<usize>; 4] = Default::default();
    for i in 0..dataset.n() {
        let cell = 2 * dataset.labels()[i] as usize + dataset.protected()[i] as usize;
        cells[cell].push(i);
    }
    for (c, members) in cells.iter().enumerate() {
        if members.len() == 1 {
            log::warn!(
                "(y={}, z={}) cell has a single member; it is always assigned to train",
                c / 2,
                c % 2
            );
        }
    }
    let quotas = allocate(&cells, plan.train_proportion, dataset.n());

    Ok((0..plan.repetitions)
        .map(|rep| {
            let mut rng = rng(derive_seed(plan.seed, &[rep as u64]));
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (members, &quota) in cells.iter().zip(&quotas) {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                train.extend_from_slice(&shuffled[..quota]);
                test.extend_from_slice(&shuffled[quota..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            SplitIndices { train, test }
        })
        .collect())
}

/// Per-cell train counts summing to round(p·n) where the per-cell bounds
/// allow it. Cells with at least two members keep one row on each side.
fn allocate(cells: &[Vec<usize>; 4], p: f64, n: usize) -> [usize; 4] {
    let bounds: Vec<(usize, usize)> = cells
        .iter()
        .map(|c| match c.len() {
            0 => (0, 0),
            1 => (1, 1),
            m => (1, m - 1),
        })
        .collect();
    let exact: Vec<f64> = cells.iter().map(|c| p * c.len() as f64).collect();
    let mut quotas = [0usize; 4];
    for k in 0..4 {
        quotas[k] = (exact[k].floor() as usize).clamp(bounds[k].0, bounds[k].1);
    }
    let target = (p * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..4).collect();
    // largest remainder first; stable sort keeps cell order on ties
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quotas[a] as f64;
        let rb = exact[b] - quotas[b] as f64;
        rb.total_cmp(&ra)
    });
    let mut total: usize = quotas.iter().sum();
    let mut i = 0;
    while total < target && order.iter().any(|&k| quotas[k] < bounds[k].1) {
        let k = order[i % 4];
        i += 1;
        if quotas[k] < bounds[k].1 {
            quotas[k] += 1;
            total += 1;
        }
    }
    let mut i = 0;
    while total > target && order.iter().any(|&k| quotas[k] > bounds[k].0) {
        let k = order[3 - i % 4];
        i += 1;
        if quotas[k] > bounds[k].0 {
            quotas[k] -= 1;
            total -= 1;
        }
    }
    quotas
}
