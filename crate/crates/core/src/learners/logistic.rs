//! Weighted, regularized logistic regression and its boundary-covariance
//! penalized variant.
//!
//! Features are standardized with weighted training statistics. The
//! objective over standardized coefficients `β` and intercept `b` is
//!
//! ```text
//! F(β, b) = Σ wᵢ ℓ(yᵢ, x̃ᵢ·β + b) / Σ wᵢ + α₂/2 ‖β‖² + α₁ ‖β‖₁ + μ · cov(β)²
//! cov(β)  = Σ wᵢ (zᵢ − z̄) (x̃ᵢ·β + b) / Σ wᵢ
//! ```
//!
//! with `μ = λ / (1 − λ + 10⁻⁶)`. The mean-loss form above equals the
//! summed loss plus an `n·μ`-scaled penalty. It is minimized by proximal
//! Newton steps with a backtracking line search.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_both_classes, sigmoid, LearnerConfig, LearnerKind, ModelParams, TrainedModel};
use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Linear score model over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Coefficients on standardized features.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl LinearModel {
    /// Signed (unnormalized) distance to the decision boundary.
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .zip(self.means.iter().zip(&self.scales))
                .map(|((&x, &beta), (&m, &s))| beta * (x - m) / s)
                .sum::<f64>()
    }

    pub fn predict(&self, features: ArrayView2<f64>) -> Vec<f64> {
        features
            .rows()
            .into_iter()
            .map(|r| sigmoid(self.decision(&r.to_vec())))
            .collect()
    }
}

/// Penalty weight on the squared boundary covariance for a given λ.
pub fn fairness_multiplier(lambda: f64) -> f64 {
    lambda / (1.0 - lambda + 1e-6)
}

pub fn fit_logistic(train: &Dataset, config: &LearnerConfig) -> Result<TrainedModel> {
    let linear = fit_linear(train, config, 0.0)?;
    Ok(TrainedModel {
        kind: LearnerKind::Logistic,
        lambda: 0.0,
        params: ModelParams::Linear(linear),
    })
}

pub fn fit_fair_logistic(train: &Dataset, lambda: f64, config: &LearnerConfig) -> Result<TrainedModel> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("λ = {lambda} outside [0, 1]")));
    }
    let [g0, g1] = train.group_sizes();
    if g0 == 0 {
        return Err(Error::GroupEmpty(0));
    }
    if g1 == 0 {
        return Err(Error::GroupEmpty(1));
    }
    let linear = fit_linear(train, config, fairness_multiplier(lambda))?;
    Ok(TrainedModel {
        kind: LearnerKind::FairLogistic,
        lambda,
        params: ModelParams::Linear(linear),
    })
}

/// `(1/n) Σ (zᵢ − z̄)(θᵀx̃ᵢ + b)` over the given rows, using the
/// standardization stored in the model.
pub fn boundary_covariance(model: &TrainedModel, features: ArrayView2<f64>, protected: &[u8]) -> Result<f64> {
    let ModelParams::Linear(linear) = &model.params else {
        return Err(Error::Unsupported(
            "boundary covariance needs a linear model".into(),
        ));
    };
    if features.ncols() != linear.coefficients.len() {
        return Err(Error::Shape {
            expected: linear.coefficients.len(),
            got: features.ncols(),
        });
    }
    if features.nrows() != protected.len() || protected.is_empty() {
        return Err(Error::Input("features and protected differ in length".into()));
    }
    let n = protected.len() as f64;
    let z_mean = protected.iter().map(|&z| f64::from(z)).sum::<f64>() / n;
    Ok(features
        .rows()
        .into_iter()
        .zip(protected)
        .map(|(r, &z)| (f64::from(z) - z_mean) * linear.decision(&r.to_vec()))
        .sum::<f64>()
        / n)
}

/// Weighted mean and population standard deviation per column. Columns
/// with no spread get scale 1 and are marked inactive.
fn standardization(train: &Dataset, weights: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let x = train.features();
    let total: f64 = weights.iter().sum();
    let mut means = Vec::with_capacity(train.d());
    let mut scales = Vec::with_capacity(train.d());
    let mut active = Vec::with_capacity(train.d());
    for col in x.columns() {
        let mean = col.iter().zip(weights).map(|(&v, &w)| w * v).sum::<f64>() / total;
        let var = col
            .iter()
            .zip(weights)
            .map(|(&v, &w)| w * (v - mean) * (v - mean))
            .sum::<f64>()
            / total;
        let sd = var.sqrt();
        if sd > 1e-12 * mean.abs().max(1.0) {
            means.push(mean);
            scales.push(sd);
            active.push(true);
        } else {
            means.push(mean);
            scales.push(1.0);
            active.push(false);
        }
    }
    (means, scales, active)
}

/// Penalized logistic objective on standardized data. Parameters are laid
/// out as `[β₀, …, β_{d−1}, b]`.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    x: Array2<f64>,
    y: Vec<f64>,
    /// Weights normalized to sum to one.
    w: Vec<f64>,
    /// Gradient of the covariance with respect to β.
    cov_direction: Vec<f64>,
    l1: f64,
    l2: f64,
    mu: f64,
}

impl LogisticObjective {
    pub fn new(train: &Dataset, config: &LearnerConfig, mu: f64) -> Self {
        let weights = train.weights();
        let (means, scales, _) = standardization(train, &weights);
        Self::with_standardization(train, &weights, &means, &scales, config, mu)
    }

    fn with_standardization(
        train: &Dataset,
        weights: &[f64],
        means: &[f64],
        scales: &[f64],
        config: &LearnerConfig,
        mu: f64,
    ) -> Self {
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|&v| v / total).collect();
        let mut x = train.features().clone();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - means[j]) / scales[j]);
        }
        let z_mean: f64 = train
            .protected()
            .iter()
            .zip(&w)
            .map(|(&z, &wi)| wi * f64::from(z))
            .sum();
        let mut cov_direction = vec![0.0; train.d()];
        for (i, row) in x.rows().into_iter().enumerate() {
            let a = w[i] * (f64::from(train.protected()[i]) - z_mean);
            for (c, &v) in cov_direction.iter_mut().zip(row.iter()) {
                *c += a * v;
            }
        }
        let (l1, l2) = config.regularization.split();
        Self {
            x,
            y: train.labels().iter().map(|&v| f64::from(v)).collect(),
            w,
            cov_direction,
            l1,
            l2,
            mu,
        }
    }

    fn d(&self) -> usize {
        self.x.ncols()
    }

    fn margins(&self, params: &[f64]) -> Vec<f64> {
        let d = self.d();
        self.x
            .rows()
            .into_iter()
            .map(|r| params[d] + r.iter().zip(params).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Boundary covariance under the training weights.
    pub fn covariance(&self, params: &[f64]) -> f64 {
        self.cov_direction.iter().zip(params).map(|(c, b)| c * b).sum()
    }

    /// Differentiable part: loss, L2 term and covariance penalty.
    pub fn smooth_value(&self, params: &[f64]) -> f64 {
        let d = self.d();
        let loss: f64 = self
            .margins(params)
            .iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((&eta, &y), &w)| w * (softplus(eta) - y * eta))
            .sum();
        let ridge = 0.5 * self.l2 * params[..d].iter().map(|b| b * b).sum::<f64>();
        let cov = self.covariance(params);
        loss + ridge + self.mu * cov * cov
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        self.smooth_value(params) + self.l1 * l1_norm(&params[..self.d()])
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let d = self.d();
        let mut g = vec![0.0; d + 1];
        for ((row, eta), (&y, &w)) in self
            .x
            .rows()
            .into_iter()
            .zip(self.margins(params))
            .zip(self.y.iter().zip(&self.w))
        {
            let r = w * (sigmoid(eta) - y);
            for (gj, &v) in g.iter_mut().zip(row.iter()) {
                *gj += r * v;
            }
            g[d] += r;
        }
        let cov = self.covariance(params);
        for j in 0..d {
            g[j] += self.l2 * params[j] + 2.0 * self.mu * cov * self.cov_direction[j];
        }
        g
    }

    fn hessian(&self, params: &[f64], active: &[usize]) -> DMatrix<f64> {
        let d = self.d();
        let k = active.len();
        // active coefficient columns followed by the intercept
        let mut h = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut v = vec![0.0; k + 1];
        for (row, eta, &w) in self
            .x
            .rows()
            .into_iter()
            .zip(self.margins(params))
            .zip(&self.w)
            .map(|((r, e), w)| (r, e, w))
        {
            let p = sigmoid(eta);
            let s = w * p * (1.0 - p);
            for (a, &j) in active.iter().enumerate() {
                v[a] = row[j];
            }
            v[k] = 1.0;
            for a in 0..=k {
                let sa = s * v[a];
                for b in a..=k {
                    h[(a, b)] += sa * v[b];
                }
            }
        }
        for a in 0..k {
            let ca = self.cov_direction[active[a]];
            h[(a, a)] += self.l2;
            for b in a..k {
                h[(a, b)] += 2.0 * self.mu * ca * self.cov_direction[active[b]];
            }
        }
        for a in 0..=k {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        debug_assert!(d + 1 > k);
        h
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|b| b.abs()).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn fit_linear(train: &Dataset, config: &LearnerConfig, mu: f64) -> Result<LinearModel> {
    config.validate()?;
    check_both_classes(train)?;
    if train.n() < 2 {
        return Err(Error::Input("need at least two rows".into()));
    }
    let weights = train.weights();
    let (means, scales, active_mask) = standardization(train, &weights);
    let objective = LogisticObjective::with_standardization(train, &weights, &means, &scales, config, mu);
    let d = train.d();
    let active: Vec<usize> = (0..d).filter(|&j| active_mask[j]).collect();

    let prevalence: f64 = objective.y.iter().zip(&objective.w).map(|(y, w)| y * w).sum();
    let mut params = vec![0.0; d + 1];
    params[d] = (prevalence / (1.0 - prevalence)).ln();

    let mut last_step = f64::INFINITY;
    for _ in 0..config.max_iter {
        let grad = objective.gradient(&params);
        let h = objective.hessian(&params, &active);
        let k = active.len();
        let g_active: Vec<f64> = active.iter().map(|&j| grad[j]).chain([grad[d]]).collect();
        let current: Vec<f64> = active.iter().map(|&j| params[j]).chain([params[d]]).collect();

        let step_active = if objective.l1 > 0.0 {
            proximal_newton_direction(&h, &g_active, &current, objective.l1)
        } else {
            newton_direction(&h, &g_active)
        };
        let mut direction = vec![0.0; d + 1];
        for (a, &j) in active.iter().enumerate() {
            direction[j] = step_active[a];
        }
        direction[d] = step_active[k];

        let decrease = grad.iter().zip(&direction).map(|(g, s)| g * s).sum::<f64>()
            + objective.l1
                * (l1_norm(
                    &params[..d]
                        .iter()
                        .zip(&direction)
                        .map(|(p, s)| p + s)
                        .collect::<Vec<_>>(),
                ) - l1_norm(&params[..d]));
        let max_dir = direction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max_dir < config.tolerance {
            apply(&mut params, &direction, 1.0);
            return Ok(finish(params, means, scales));
        }
        if decrease >= 0.0 {
            // no descent left at working precision
            if max_dir < config.tolerance.sqrt() {
                return Ok(finish(params, means, scales));
            }
            return Err(Error::Convergence {
                iterations: config.max_iter,
                residual: max_dir,
            });
        }

        let f0 = objective.value(&params);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = params.iter().zip(&direction).map(|(p, s)| p + t * s).collect();
            if objective.value(&trial) <= f0 + 1e-4 * t * decrease {
                params = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        last_step = t * max_dir;
        if !accepted {
            if max_dir < config.tolerance.sqrt() {
                return Ok(finish(params, means, scales));
            }
            return Err(Error::Convergence {
                iterations: config.max_iter,
                residual: max_dir,
            });
        }
        if last_step < config.tolerance {
            return Ok(finish(params, means, scales));
        }
    }
    Err(Error::Convergence {
        iterations: config.max_iter,
        residual: last_step,
    })
}

fn apply(params: &mut [f64], direction: &[f64], t: f64) {
    for (p, s) in params.iter_mut().zip(direction) {
        *p += t * s;
    }
}

fn finish(params: Vec<f64>, means: Vec<f64>, scales: Vec<f64>) -> LinearModel {
    let d = means.len();
    LinearModel {
        coefficients: params[..d].to_vec(),
        intercept: params[d],
        means,
        scales,
    }
}

/// Solves `H s = −g`, adding diagonal jitter if `H` is numerically singular.
fn newton_direction(h: &DMatrix<f64>, g: &[f64]) -> Vec<f64> {
    let rhs = -DVector::from_column_slice(g);
    let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut jitter = 0.0;
    loop {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            return chol.solve(&rhs).iter().copied().collect();
        }
        jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 10.0 };
    }
}

/// Minimizes the local model `gᵀs + ½sᵀHs + α‖(p + s)_β‖₁` with accelerated
/// proximal gradient. The last coordinate (intercept) is not penalized.
fn proximal_newton_direction(h: &DMatrix<f64>, g: &[f64], current: &[f64], l1: f64) -> Vec<f64> {
    let k = g.len();
    let lipschitz = largest_eigenvalue(h) * 1.01 + 1e-12;
    let step = 1.0 / lipschitz;
    let hm = h.clone();
    let gv = DVector::from_column_slice(g);
    let p = DVector::from_column_slice(current);

    let prox = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = v.clone();
        for i in 0..k - 1 {
            out[i] = soft_threshold(v[i], step * l1);
        }
        out
    };
    // iterate on u = p + s
    let mut u = p.clone();
    let mut y = u.clone();
    let mut momentum = 1.0f64;
    for _ in 0..50_000 {
        let grad = &gv + &hm * (&y - &p);
        let next = prox(&(&y - step * grad));
        let delta = &next - &u;
        let change = delta.amax();
        // gradient-based adaptive restart
        let restart = (&y - &next).dot(&delta) > 0.0;
        let next_momentum = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
        };
        y = if restart {
            next.clone()
        } else {
            &next + ((momentum - 1.0) / next_momentum) * &delta
        };
        momentum = next_momentum;
        u = next;
        if change <= 1e-13 * (1.0 + u.amax()) {
            break;
        }
    }
    (u - p).iter().copied().collect()
}

fn largest_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let mut v = DVector::from_element(h.nrows(), 1.0 / (h.nrows() as f64).sqrt());
    let mut value = 0.0;
    for _ in 0..100 {
        let hv = h * &v;
        let norm = hv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = hv / norm;
        if (norm - value).abs() <= 1e-10 * norm {
            return norm;
        }
        value = norm;
        v = next;
    }
    // power iteration converges from below; pad by the Gershgorin gap
    let gershgorin = (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| h[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    value.max(gershgorin.min(value * 1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{predict_scores, Regularization};
    use crate::metrics::auc;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let mut x = Array2::<f64>::zeros((n, d));
        let mut z = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let zi: u8 = rng.random_bool(0.5).into();
            let mut s = -0.2 + 0.8 * f64::from(zi);
            for j in 0..d {
                let v: f64 = StandardNormal.sample(&mut rng);
                x[[i, j]] = v + if j == 0 { f64::from(zi) } else { 0.0 };
                s += (j as f64 * 0.3 - 0.4) * x[[i, j]];
            }
            z.push(zi);
            y.push(u8::from(rng.random_bool(sigmoid(s))));
        }
        let names = (0..d).map(|j| format!("x{j}")).collect();
        Dataset::new(x, z, y, names).unwrap()
    }

    fn coefficients(model: &TrainedModel) -> (Vec<f64>, f64) {
        match &model.params {
            ModelParams::Linear(m) => (m.coefficients.clone(), m.intercept),
            _ => unreachable!(),
        }
    }

    #[test]
    fn separable_toy_reaches_perfect_auc() {
        let x = array![[0.0, 0.1], [0.2, 0.3], [0.1, -0.2], [2.0, 2.1], [2.2, 1.9], [1.8, 2.4]];
        let ds = Dataset::new(x.clone(), vec![0, 1, 0, 1, 0, 1], vec![0, 0, 0, 1, 1, 1], vec!["a".into(), "b".into()]).unwrap();
        let model = fit_logistic(&ds, &LearnerConfig::logistic(Regularization::L2 { strength: 1.0 })).unwrap();
        let s = predict_scores(&model, x.view()).unwrap();
        assert_eq!(auc(&s, ds.labels()).unwrap(), 1.0);
    }

    #[test]
    fn doubled_weight_equals_duplicated_row() {
        let ds = random_dataset(60, 3, 11);
        for reg in [
            Regularization::None,
            Regularization::L2 { strength: 0.1 },
            Regularization::L1 { strength: 0.01 },
        ] {
            let config = LearnerConfig::logistic(reg);
            let mut w = vec![1.0; ds.n()];
            w[5] = 2.0;
            let weighted = fit_logistic(&ds.clone().with_weights(w).unwrap(), &config).unwrap();
            let mut rows: Vec<usize> = (0..ds.n()).collect();
            rows.push(5);
            let duplicated = fit_logistic(&ds.select_rows(&rows), &config).unwrap();
            let (a, ai) = coefficients(&weighted);
            let (b, bi) = coefficients(&duplicated);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6, "{reg:?}: {a:?} vs {b:?}");
            }
            assert!((ai - bi).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_feature_gets_exact_zero_under_l1() {
        let ds = random_dataset(80, 2, 3);
        let mut x = ds.features().clone();
        x.column_mut(1).fill(4.0);
        let ds = ds.with_features(x, vec!["a".into(), "c".into()]).unwrap();
        let model = fit_logistic(&ds, &LearnerConfig::logistic(Regularization::L1 { strength: 0.1 })).unwrap();
        assert_eq!(coefficients(&model).0[1], 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = Dataset::new(array![[1.0], [2.0]], vec![0, 1], vec![1, 1], vec!["a".into()]).unwrap();
        assert!(matches!(fit_logistic(&ds, &LearnerConfig::default()), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn fair_logistic_at_zero_is_plain_logistic() {
        let ds = random_dataset(120, 4, 5);
        for reg in [Regularization::None, Regularization::ElasticNet { strength: 0.1, mixing: 0.5 }] {
            let config = LearnerConfig::logistic(reg);
            let a = coefficients(&fit_logistic(&ds, &config).unwrap());
            let b = coefficients(&fit_fair_logistic(&ds, 0.0, &config).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn covariance_shrinks_with_lambda() {
        let ds = random_dataset(400, 4, 9);
        let config = LearnerConfig::logistic(Regularization::L2 { strength: 0.01 });
        let mut previous = f64::INFINITY;
        for lambda in [0.0, 0.25, 0.5, 0.75, 0.95, 1.0] {
            let m = fit_fair_logistic(&ds, lambda, &config).unwrap();
            let cov = boundary_covariance(&m, ds.features().view(), ds.protected()).unwrap().abs();
            assert!(cov <= previous * 1.05 + 1e-12, "λ={lambda}: {cov} after {previous}");
            previous = cov;
        }
        assert!(previous < 1e-4);
    }

    #[test]
    fn covariance_penalty_with_l1_converges_at_lambda_one() {
        let ds = random_dataset(300, 5, 21);
        let config = LearnerConfig::logistic(Regularization::L1 { strength: 0.01 });
        let m = fit_fair_logistic(&ds, 1.0, &config).unwrap();
        let cov = boundary_covariance(&m, ds.features().view(), ds.protected()).unwrap();
        assert!(cov.abs() < 1e-3);
    }

    #[test]
    fn boundary_covariance_matches_direct_computation() {
        let ds = random_dataset(10, 3, 17);
        let model = fit_logistic(&ds, &LearnerConfig::logistic(Regularization::L2 { strength: 0.5 })).unwrap();
        let ModelParams::Linear(lin) = &model.params else { unreachable!() };
        let zbar = ds.protected().iter().map(|&z| z as f64).sum::<f64>() / 10.0;
        let mut direct = 0.0;
        for i in 0..10 {
            let mut dist = lin.intercept;
            for j in 0..3 {
                dist += lin.coefficients[j] * (ds.features()[[i, j]] - lin.means[j]) / lin.scales[j];
            }
            direct += (ds.protected()[i] as f64 - zbar) * dist;
        }
        direct /= 10.0;
        let got = boundary_covariance(&model, ds.features().view(), ds.protected()).unwrap();
        assert!((got - direct).abs() < 1e-12);

        let constant_z = vec![1u8; 10];
        assert_eq!(boundary_covariance(&model, ds.features().view(), &constant_z).unwrap(), 0.0);
        let zero = TrainedModel {
            params: ModelParams::Linear(LinearModel {
                coefficients: vec![0.0; 3],
                intercept: 0.0,
                ..lin.clone()
            }),
            ..model.clone()
        };
        assert_eq!(boundary_covariance(&zero, ds.features().view(), ds.protected()).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let ds = random_dataset(50, 3, 23);
        let config = LearnerConfig::logistic(Regularization::L2 { strength: 0.3 });
        let objective = LogisticObjective::new(&ds, &config, fairness_multiplier(0.7));
        let mut rng = crate::seed::rng(1);
        for _ in 0..20 {
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = objective.gradient(&p);
            for j in 0..4 {
                let h = 1e-6;
                let mut a = p.clone();
                let mut b = p.clone();
                a[j] += h;
                b[j] -= h;
                let fd = (objective.smooth_value(&a) - objective.smooth_value(&b)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1e-2));
            }
        }
    }
}
