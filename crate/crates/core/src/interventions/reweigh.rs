use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Instance weights `P(Z=z)·P(Y=y) / P(Z=z, Y=y)` per (z, y) cell, which make
/// the target statistically independent of the protected attribute in the
/// weighted sample.
pub fn reweigh(train: &Dataset) -> Result<Vec<f64>> {
    let n = train.n() as f64;
    let mut joint = [[0usize; 2]; 2];
    for (&z, &y) in train.protected().iter().zip(train.labels()) {
        joint[z as usize][y as usize] += 1;
    }
    for z in 0..2 {
        for y in 0..2 {
            if joint[z][y] == 0 {
                return Err(Error::CellEmpty {
                    y: y as u8,
                    z: z as u8,
                });
            }
        }
    }
    let z_count = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let y_count = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let cell_weight = |z: usize, y: usize| {
        (z_count[z] as f64 / n) * (y_count[y] as f64 / n) / (joint[z][y] as f64 / n)
    };
    Ok(train
        .protected()
        .iter()
        .zip(train.labels())
        .map(|(&z, &y)| cell_weight(z as usize, y as usize))
        .collect())
}

/// Two-state reweighing: full reweighing for `λ ≥ 0.5`, unit weights below.
pub fn reweigh_with_lambda(train: &Dataset, lambda: f64) -> Result<Vec<f64>> {
    if lambda >= 0.5 {
        reweigh(train)
    } else {
        Ok(vec![1.0; train.n()])
    }
}
