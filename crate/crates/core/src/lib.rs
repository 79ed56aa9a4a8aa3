//! Fairness benchmarking for binary classifiers.
//!
//! The crate measures how predictive performance and group fairness trade
//! off as a fairness parameter λ and a decision threshold τ vary:
//!
//! - [`metrics`]: confusion-based fairness metrics (DI, EO, SPD), AUC, Brier.
//! - [`faireff`]: λ×τ metric surfaces, their integrals and fair efficiency Θ.
//! - [`datasets`], [`synthgen`]: tabular loading, stratified splits and
//!   calibrated synthetic benchmarks.
//! - [`learners`], [`interventions`]: classifiers (including an in-training
//!   fair logistic regression) and preprocessing interventions.
//! - [`policies`], [`harness`]: threshold policies, fairness budgets and the
//!   end-to-end experiment runner.
//!
//! The metric and integration layers are generic over [`Scalar`]; aliases
//! for `f64` and `f32` are provided below.

pub mod datasets;
pub mod error;
pub mod faireff;
pub mod harness;
pub mod interventions;
pub mod learners;
pub mod metrics;
pub mod policies;
pub mod scalar;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ThresholdMetricsF64 = metrics::ThresholdMetrics<f64>;
pub type ThresholdMetricsF32 = metrics::ThresholdMetrics<f32>;
pub type MetricSurfaceF64 = faireff::MetricSurface<f64>;
pub type MetricSurfaceF32 = faireff::MetricSurface<f32>;
pub type AucCurveF64 = faireff::AucCurve<f64>;
pub type AucCurveF32 = faireff::AucCurve<f32>;
pub type FairEfficiencyF64 = faireff::FairEfficiency<f64>;
pub type FairEfficiencyF32 = faireff::FairEfficiency<f32>;
