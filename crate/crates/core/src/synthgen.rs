//! Synthetic biased datasets drawn from a linear latent-score scheme.
//!
//! Every row samples `z ~ Bernoulli(z_prob)`, then covariates, then a latent
//! log-odds score `s`, and finally `y ~ Bernoulli(σ(s))`:
//!
//! | scheme | covariates | score |
//! |---|---|---|
//! | simple-direct | fair `x_F ~ N(0,1)` | `s₀ + w_F·x_F + w_z z` |
//! | simple-proxy | fair, unfair `x_U ~ N(z,1)` | `s₀ + w_F·x_F + w_U·x_U` |
//! | interactions-direct | fair, binary `x_I` | `s₀ + w_F·x_F + w_z z ∏ x_I` |
//! | interactions-proxy | fair, unfair, one binary `x_I` | `s₀ + w_F·x_F + x_I (w_U·x_U)` |
//!
//! Columns are ordered fair, unfair, interaction, then `z`.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, name_tag, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SimpleDirect,
    SimpleProxy,
    InteractionsDirect,
    InteractionsProxy,
}

impl Scheme {
    pub fn is_direct(&self) -> bool {
        matches!(self, Self::SimpleDirect | Self::InteractionsDirect)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub scheme: Scheme,
    pub n: usize,
    pub n_fair: usize,
    #[serde(default)]
    pub n_unfair: usize,
    #[serde(default)]
    pub n_interaction: usize,
    pub z_prob: f64,
    #[serde(default = "half")]
    pub interaction_prob: f64,
    pub fair_weights: Vec<f64>,
    #[serde(default)]
    pub unfair_weights: Vec<f64>,
    #[serde(default)]
    pub direct_weight: f64,
    pub intercept: f64,
    pub seed: u64,
}

fn half() -> f64 {
    0.5
}

impl SyntheticSpec {
    pub fn n_features(&self) -> usize {
        self.n_fair + self.n_unfair + self.n_interaction + 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Spec(m));
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        for (name, p) in [("z_prob", self.z_prob), ("interaction_prob", self.interaction_prob)] {
            if !(p > 0.0 && p < 1.0) {
                return fail(format!("{name} = {p} outside (0, 1)"));
            }
        }
        if self.fair_weights.len() != self.n_fair {
            return fail(format!(
                "{} fair weights for {} fair features",
                self.fair_weights.len(),
                self.n_fair
            ));
        }
        if self.unfair_weights.len() != self.n_unfair {
            return fail(format!(
                "{} unfair weights for {} unfair features",
                self.unfair_weights.len(),
                self.n_unfair
            ));
        }
        let (unfair_ok, interaction_ok) = match self.scheme {
            Scheme::SimpleDirect => (self.n_unfair == 0, self.n_interaction == 0),
            Scheme::SimpleProxy => (self.n_unfair > 0, self.n_interaction == 0),
            Scheme::InteractionsDirect => (self.n_unfair == 0, self.n_interaction > 0),
            Scheme::InteractionsProxy => (self.n_unfair > 0, self.n_interaction == 1),
        };
        if !unfair_ok || !interaction_ok {
            return fail(format!(
                "{:?} does not allow {} unfair and {} interaction features",
                self.scheme, self.n_unfair, self.n_interaction
            ));
        }
        if !self.scheme.is_direct() && self.direct_weight != 0.0 {
            return fail(format!("{:?} has no direct z effect", self.scheme));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.n_fair)
            .map(|j| format!("fair_{j}"))
            .chain((0..self.n_unfair).map(|j| format!("unfair_{j}")))
            .chain((0..self.n_interaction).map(|j| format!("interaction_{j}")))
            .chain(["z".to_string()])
            .collect()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// One row's covariates plus the parts of its latent score.
struct Row {
    z: u8,
    values: Vec<f64>,
    /// `w_F · x_F`
    fair_part: f64,
    /// The term scaled by the bias strength: `z`, `z ∏ x_I` or `x_I (w_U·x_U)`.
    bias_part: f64,
}

fn draw_row<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> Row {
    let z = u8::from(rng.random::<f64>() < spec.z_prob);
    let zf = f64::from(z);
    let mut values = Vec::with_capacity(spec.n_features());
    let mut fair_part = 0.0;
    for &w in &spec.fair_weights {
        let x: f64 = StandardNormal.sample(rng);
        fair_part += w * x;
        values.push(x);
    }
    let mut unfair_part = 0.0;
    for &w in &spec.unfair_weights {
        let noise: f64 = StandardNormal.sample(rng);
        let x = zf + noise;
        unfair_part += w * x;
        values.push(x);
    }
    let mut product = 1.0;
    for _ in 0..spec.n_interaction {
        let x = f64::from(u8::from(rng.random::<f64>() < spec.interaction_prob));
        product *= x;
        values.push(x);
    }
    values.push(zf);
    let bias_part = match spec.scheme {
        Scheme::SimpleDirect => spec.direct_weight * zf,
        Scheme::SimpleProxy => unfair_part,
        Scheme::InteractionsDirect => spec.direct_weight * zf * product,
        Scheme::InteractionsProxy => product * unfair_part,
    };
    Row {
        z,
        values,
        fair_part,
        bias_part,
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let d = spec.n_features();
    let mut features = Array2::zeros((spec.n, d));
    let mut protected = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let row = draw_row(spec, &mut rng);
        let s = spec.intercept + row.fair_part + row.bias_part;
        let u: f64 = rng.random();
        labels.push(u8::from(u < sigmoid(s)));
        protected.push(row.z);
        for (j, v) in row.values.into_iter().enumerate() {
            features[[i, j]] = v;
        }
    }
    Dataset::new(features, protected, labels, spec.feature_names())
}

/// Rows used to estimate expected prevalence and SPD during calibration.
pub const CALIBRATION_ROWS: usize = 100_000;
const BISECTION_STEPS: usize = 60;

/// Fixed covariate sample; the bias term is stored at unit strength.
struct CalibrationSample {
    z: Vec<u8>,
    fair: Vec<f64>,
    bias: Vec<f64>,
}

impl CalibrationSample {
    fn new(spec: &SyntheticSpec) -> Self {
        let unit = SyntheticSpec {
            direct_weight: if spec.scheme.is_direct() { 1.0 } else { 0.0 },
            ..spec.clone()
        };
        let mut rng = rng(derive_seed(spec.seed, &[name_tag("calibration")]));
        let (mut z, mut fair, mut bias) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..CALIBRATION_ROWS {
            let row = draw_row(&unit, &mut rng);
            z.push(row.z);
            fair.push(row.fair_part);
            bias.push(row.bias_part);
        }
        Self { z, fair, bias }
    }

    /// Expected (prevalence, SPD) for intercept `s0` and bias strength `a`.
    fn moments(&self, s0: f64, a: f64) -> (f64, f64) {
        let mut sum = [0.0; 2];
        let mut count = [0usize; 2];
        for i in 0..self.z.len() {
            let p = sigmoid(s0 + self.fair[i] + a * self.bias[i]);
            sum[self.z[i] as usize] += p;
            count[self.z[i] as usize] += 1;
        }
        let prevalence = (sum[0] + sum[1]) / self.z.len() as f64;
        let spd = (sum[1] / count[1].max(1) as f64 - sum[0] / count[0].max(1) as f64).abs();
        (prevalence, spd)
    }

    /// Intercept giving the target prevalence at strength `a` (prevalence is
    /// increasing in `s0`).
    fn intercept_for(&self, a: f64, prevalence: f64) -> f64 {
        let (mut lo, mut hi) = (-30.0, 30.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.moments(mid, a).0 < prevalence {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Finds the intercept and bias strength reproducing the target prevalence
/// and target SPD. Direct schemes solve for `direct_weight`; proxy schemes
/// rescale `unfair_weights`. Both searches are bisections on a fixed
/// covariate sample of [`CALIBRATION_ROWS`] rows, so the result is
/// deterministic and independent of the input coefficients' magnitudes.
pub fn calibrate(
    spec: &SyntheticSpec,
    target_prevalence: f64,
    target_spd: f64,
    tolerance: f64,
) -> Result<SyntheticSpec> {
    spec.validate()?;
    if !(target_prevalence > 0.0 && target_prevalence < 1.0) || !(0.0..1.0).contains(&target_spd) {
        return Err(Error::Parameter("calibration targets outside (0, 1)".into()));
    }
    if !spec.scheme.is_direct() && spec.unfair_weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Spec("proxy scheme needs nonzero unfair weights to rescale".into()));
    }
    // proxy strengths multiply the unit-norm direction of the unfair weights
    let direction: Vec<f64> = if spec.scheme.is_direct() {
        Vec::new()
    } else {
        let norm = spec.unfair_weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let sign = if spec.unfair_weights.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        spec.unfair_weights.iter().map(|w| sign * w / norm).collect()
    };
    let unit = SyntheticSpec {
        unfair_weights: direction.clone(),
        ..spec.clone()
    };
    let sample = CalibrationSample::new(&unit);
    let spd_at = |a: f64| {
        let s0 = sample.intercept_for(a, target_prevalence);
        (s0, sample.moments(s0, a))
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    while spd_at(hi).1 .1 < target_spd {
        hi *= 2.0;
        if hi > 1e3 {
            let (_, (p, s)) = spd_at(hi);
            return Err(Error::Calibration {
                prevalence_residual: p - target_prevalence,
                spd_residual: s - target_spd,
            });
        }
    }
    let strength = if spd_at(0.0).1 .1 >= target_spd {
        0.0
    } else {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if spd_at(mid).1 .1 < target_spd {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (intercept, (prevalence, spd)) = spd_at(strength);
    if (prevalence - target_prevalence).abs() > tolerance || (spd - target_spd).abs() > tolerance {
        return Err(Error::Calibration {
            prevalence_residual: prevalence - target_prevalence,
            spd_residual: spd - target_spd,
        });
    }
    let mut out = spec.clone();
    out.intercept = intercept;
    if spec.scheme.is_direct() {
        out.direct_weight = strength;
    } else {
        out.unfair_weights = direction.iter().map(|w| strength * w).collect();
    }
    Ok(out)
}

/// Named presets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "S-D")]
    SimpleDirect,
    #[serde(rename = "S-P")]
    SimpleProxy,
    #[serde(rename = "I-D")]
    InteractionsDirect,
    #[serde(rename = "I-P")]
    InteractionsProxy,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SimpleDirect,
        Preset::SimpleProxy,
        Preset::InteractionsDirect,
        Preset::InteractionsProxy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SimpleDirect => "S-D",
            Self::SimpleProxy => "S-P",
            Self::InteractionsDirect => "I-D",
            Self::InteractionsProxy => "I-P",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))
    }

    /// Target (prevalence, SPD) the preset is calibrated to.
    pub fn targets(&self) -> (f64, f64) {
        match self {
            Self::SimpleDirect => (0.53, 0.14),
            Self::SimpleProxy => (0.51, 0.10),
            Self::InteractionsDirect => (0.50, 0.14),
            Self::InteractionsProxy => (0.51, 0.10),
        }
    }

    fn frozen(&self) -> &'static str {
        match self {
            Self::SimpleDirect => include_str!("../presets/s-d.toml"),
            Self::SimpleProxy => include_str!("../presets/s-p.toml"),
            Self::InteractionsDirect => include_str!("../presets/i-d.toml"),
            Self::InteractionsProxy => include_str!("../presets/i-p.toml"),
        }
    }

    /// The calibrated preset spec with `n` rows and the given seed.
    pub fn spec(&self, n: usize, seed: u64) -> SyntheticSpec {
        let frozen = SyntheticSpec::from_toml(self.frozen()).expect("shipped preset parses");
        SyntheticSpec { n, seed, ..frozen }
    }

    /// Uncalibrated starting point: feature counts, probabilities and
    /// weights drawn from fixed-seed uniforms (fair in (−1, 1), unfair in
    /// (0.5, 1)); intercept and bias strength are left for [`calibrate`].
    pub fn base_spec(&self) -> SyntheticSpec {
        let (scheme, n_fair, n_unfair, n_interaction, interaction_prob) = match self {
            Self::SimpleDirect => (Scheme::SimpleDirect, 11, 0, 0, 0.5),
            Self::SimpleProxy => (Scheme::SimpleProxy, 11, 4, 0, 0.5),
            Self::InteractionsDirect => (Scheme::InteractionsDirect, 13, 0, 4, 0.8),
            Self::InteractionsProxy => (Scheme::InteractionsProxy, 10, 4, 1, 0.5),
        };
        let mut rng = rng(derive_seed(PRESET_WEIGHT_SEED, &[name_tag(self.name())]));
        let fair_weights = (0..n_fair).map(|_| rng.random_range(-1.0..1.0)).collect();
        let unfair_weights = (0..n_unfair).map(|_| rng.random_range(0.5..1.0)).collect();
        SyntheticSpec {
            scheme,
            n: 10_000,
            n_fair,
            n_unfair,
            n_interaction,
            z_prob: 0.5,
            interaction_prob,
            fair_weights,
            unfair_weights,
            direct_weight: if scheme.is_direct() { 1.0 } else { 0.0 },
            intercept: 0.0,
            seed: 0,
        }
    }
}

pub const PRESET_WEIGHT_SEED: u64 = 20_201_106;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::target_spd;

    #[test]
    fn preset_shapes_match_feature_counts() {
        let counts: Vec<usize> = Preset::ALL.iter().map(|p| p.spec(10, 0).n_features()).collect();
        assert_eq!(counts, vec![12, 16, 18, 16]);
        for p in Preset::ALL {
            let ds = generate(&p.spec(50, 1)).unwrap();
            assert_eq!(ds.d(), p.spec(50, 1).n_features());
            assert_eq!(ds.feature_names().last().unwrap(), "z");
        }
    }

    #[test]
    fn frozen_fair_weights_come_from_the_fixed_seed() {
        for p in Preset::ALL {
            assert_eq!(p.spec(10, 0).fair_weights, p.base_spec().fair_weights, "{}", p.name());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = Preset::SimpleProxy.spec(500, 7);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SyntheticSpec { seed: 8, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn spec_errors() {
        let mut spec = Preset::SimpleDirect.spec(10, 0);
        spec.n_unfair = 2;
        spec.unfair_weights = vec![1.0, 1.0];
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
        let mut spec = Preset::InteractionsProxy.spec(10, 0);
        spec.n_interaction = 2;
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
        let mut spec = Preset::SimpleProxy.spec(10, 0);
        spec.direct_weight = 1.0;
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
        let mut spec = Preset::SimpleProxy.spec(10, 0);
        spec.z_prob = 1.0;
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
    }

    #[test]
    fn no_direct_effect_means_no_disparity() {
        let spec = SyntheticSpec {
            direct_weight: 0.0,
            ..Preset::SimpleDirect.spec(100_000, 3)
        };
        assert!(target_spd(&generate(&spec).unwrap()).unwrap() <= 0.02);
    }

    #[test]
    fn inactive_interactions_reproduce_the_unbiased_labels() {
        let base = Preset::InteractionsDirect.spec(5_000, 4);
        let off = SyntheticSpec {
            interaction_prob: 1e-300,
            ..base.clone()
        };
        let unbiased = SyntheticSpec {
            direct_weight: 0.0,
            ..off.clone()
        };
        let a = generate(&off).unwrap();
        assert!(a.features().column(13).iter().all(|&v| v == 0.0));
        assert_eq!(a, generate(&unbiased).unwrap());
    }

    #[test]
    fn direct_effect_is_monotone() {
        let base = Preset::SimpleDirect.spec(100_000, 5);
        let spds: Vec<f64> = [0.0, 0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&w| target_spd(&generate(&SyntheticSpec { direct_weight: w, ..base.clone() }).unwrap()).unwrap())
            .collect();
        assert!(spds.windows(2).all(|w| w[0] <= w[1] + 0.005), "{spds:?}");
    }

    #[test]
    fn calibration_to_zero_disparity_gives_zero_weight() {
        let out = calibrate(&Preset::SimpleDirect.base_spec(), 0.53, 0.0, 0.02).unwrap();
        assert_eq!(out.direct_weight, 0.0);
    }

    #[test]
    fn calibration_is_idempotent() {
        let once = calibrate(&Preset::SimpleProxy.base_spec(), 0.51, 0.10, 0.02).unwrap();
        let twice = calibrate(&once, 0.51, 0.10, 0.02).unwrap();
        assert!((once.intercept - twice.intercept).abs() < 1e-9);
        for (a, b) in once.unfair_weights.iter().zip(&twice.unfair_weights) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unreachable_disparity_is_reported() {
        let mut spec = Preset::InteractionsDirect.base_spec();
        spec.interaction_prob = 0.1;
        assert!(matches!(calibrate(&spec, 0.5, 0.5, 0.02), Err(Error::Calibration { .. })));
    }
}
