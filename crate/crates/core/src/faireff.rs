//! Threshold- and λ-integrated metrics and the fair-efficiency harmonic mean.
//!
//! A [`MetricSurface`] holds a metric sampled on a λ×τ grid. Its integral
//! `K` uses the composite trapezoid rule along τ; along λ the rule depends
//! on [`LambdaMode`]. Fair efficiency combines a predictive integral `K_p`
//! and a fairness integral `K_f` by their harmonic mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// Trapezoid over a λ grid spanning [0, 1].
    Continuous,
    /// Uniform-weight mean over the swept λ values.
    DiscreteWeighted,
    /// A single λ (fairness-unaware learners); no λ integration.
    SinglePoint,
}

impl LambdaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::DiscreteWeighted => "discrete-weighted",
            Self::SinglePoint => "single-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSurface<T> {
    lambda_grid: Vec<T>,
    tau_grid: Vec<T>,
    /// Row-major, one row per λ.
    values: Vec<T>,
    mode: LambdaMode,
}

fn check_grid<T: Scalar>(grid: &[T], axis: &str, min_points: usize) -> Result<()> {
    if grid.len() < min_points {
        return Err(Error::Grid(format!(
            "{axis} grid has {} points, need at least {min_points}",
            grid.len()
        )));
    }
    if grid.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
        return Err(Error::Grid(format!("{axis} grid leaves [0, 1]")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Grid(format!("{axis} grid is not strictly ascending")));
    }
    Ok(())
}

fn check_spans_unit<T: Scalar>(grid: &[T], axis: &str) -> Result<()> {
    if grid.first() != Some(&T::zero()) || grid.last() != Some(&T::one()) {
        return Err(Error::Grid(format!("{axis} grid must start at 0 and end at 1")));
    }
    Ok(())
}

impl<T: Scalar> MetricSurface<T> {
    pub fn new(lambda_grid: Vec<T>, tau_grid: Vec<T>, values: Vec<T>, mode: LambdaMode) -> Result<Self> {
        check_grid(&tau_grid, "tau", 2)?;
        check_spans_unit(&tau_grid, "tau")?;
        match mode {
            LambdaMode::Continuous => {
                check_grid(&lambda_grid, "lambda", 2)?;
                check_spans_unit(&lambda_grid, "lambda")?;
            }
            LambdaMode::DiscreteWeighted => check_grid(&lambda_grid, "lambda", 1)?,
            LambdaMode::SinglePoint => {
                check_grid(&lambda_grid, "lambda", 1)?;
                if lambda_grid.len() != 1 {
                    return Err(Error::Grid("single-point surface needs exactly one λ".into()));
                }
            }
        }
        if values.len() != lambda_grid.len() * tau_grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a {}×{} grid",
                values.len(),
                lambda_grid.len(),
                tau_grid.len()
            )));
        }
        if values.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::Grid("surface values must lie in [0, 1]".into()));
        }
        Ok(Self {
            lambda_grid,
            tau_grid,
            values,
            mode,
        })
    }

    /// Builds a surface by evaluating `f(λ, τ)` on the grid.
    pub fn from_fn(
        lambda_grid: Vec<T>,
        tau_grid: Vec<T>,
        mode: LambdaMode,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        let values = lambda_grid
            .iter()
            .flat_map(|&l| tau_grid.iter().map(move |&t| (l, t)))
            .map(|(l, t)| f(l, t))
            .collect();
        Self::new(lambda_grid, tau_grid, values, mode)
    }

    pub fn lambda_grid(&self) -> &[T] {
        &self.lambda_grid
    }

    pub fn tau_grid(&self) -> &[T] {
        &self.tau_grid
    }

    pub fn mode(&self) -> LambdaMode {
        self.mode
    }

    pub fn value(&self, lambda_idx: usize, tau_idx: usize) -> T {
        self.values[lambda_idx * self.tau_grid.len() + tau_idx]
    }

    pub fn row(&self, lambda_idx: usize) -> &[T] {
        let w = self.tau_grid.len();
        &self.values[lambda_idx * w..(lambda_idx + 1) * w]
    }
}

/// Composite trapezoid rule for samples `ys` at abscissae `xs`.
pub fn trapezoid<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) * T::half())
        .sum()
}

fn integrate_lambda<T: Scalar>(lambda_grid: &[T], per_lambda: &[T], mode: LambdaMode) -> T {
    match mode {
        LambdaMode::Continuous => trapezoid(lambda_grid, per_lambda),
        LambdaMode::DiscreteWeighted => {
            per_lambda.iter().copied().sum::<T>() / T::of_usize(per_lambda.len())
        }
        LambdaMode::SinglePoint => per_lambda[0],
    }
}

/// Integral of the surface over τ ∈ [0, 1] and λ per the surface mode.
pub fn k_integral<T: Scalar>(surface: &MetricSurface<T>) -> T {
    let per_lambda: Vec<T> = (0..surface.lambda_grid.len())
        .map(|i| trapezoid(&surface.tau_grid, surface.row(i)))
        .collect();
    integrate_lambda(&surface.lambda_grid, &per_lambda, surface.mode)
}

/// AUC measured at each swept λ.
#[derive(Debug, Clone, PartialEq)]
pub struct AucCurve<T> {
    lambda_grid: Vec<T>,
    values: Vec<T>,
    mode: LambdaMode,
}

impl<T: Scalar> AucCurve<T> {
    pub fn new(lambda_grid: Vec<T>, values: Vec<T>, mode: LambdaMode) -> Result<Self> {
        match mode {
            LambdaMode::Continuous => {
                check_grid(&lambda_grid, "lambda", 2)?;
                check_spans_unit(&lambda_grid, "lambda")?;
            }
            LambdaMode::DiscreteWeighted => check_grid(&lambda_grid, "lambda", 1)?,
            LambdaMode::SinglePoint => {
                check_grid(&lambda_grid, "lambda", 1)?;
                if lambda_grid.len() != 1 {
                    return Err(Error::Grid("single-point curve needs exactly one λ".into()));
                }
            }
        }
        if values.len() != lambda_grid.len() {
            return Err(Error::Grid(format!(
                "{} AUC values for {} λ points",
                values.len(),
                lambda_grid.len()
            )));
        }
        if values.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::Grid("AUC values must lie in [0, 1]".into()));
        }
        Ok(Self {
            lambda_grid,
            values,
            mode,
        })
    }

    pub fn lambda_grid(&self) -> &[T] {
        &self.lambda_grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mode(&self) -> LambdaMode {
        self.mode
    }
}

/// λ-integral of `max(0, 2·AUC − 1)`.
pub fn k_auc<T: Scalar>(curve: &AucCurve<T>) -> T {
    let scaled: Vec<T> = curve
        .values
        .iter()
        .map(|&a| (T::two() * a - T::one()).max(T::zero()))
        .collect();
    integrate_lambda(&curve.lambda_grid, &scaled, curve.mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairEfficiency<T> {
    pub k_p: T,
    pub k_f: T,
    pub theta: T,
}

/// Harmonic mean of `k_p` and `k_f`; 0 when their sum is 0.
pub fn fair_efficiency<T: Scalar>(k_p: T, k_f: T) -> Result<FairEfficiency<T>> {
    for (name, v) in [("K_p", k_p), ("K_f", k_f)] {
        if !(v >= T::zero() && v <= T::one()) {
            return Err(Error::Parameter(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let sum = k_p + k_f;
    let theta = if sum > T::zero() {
        T::two() * k_p * k_f / sum
    } else {
        T::zero()
    };
    Ok(FairEfficiency { k_p, k_f, theta })
}

/// `n` evenly spaced points from 0 to 1 inclusive.
pub fn uniform_grid<T: Scalar>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    T::one()
                } else {
                    T::of_usize(i) / T::of_usize(n - 1)
                }
            })
            .collect(),
    }
}
