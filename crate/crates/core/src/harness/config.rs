use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::Pipeline;
use crate::datasets::{load_tabular, Dataset, DatasetSchema, SplitPlan};
use crate::error::{Error, Result};
use crate::faireff::uniform_grid;
use crate::policies::{Policy, PolicyKind};
use crate::seed::{derive_seed, name_tag};
use crate::synthgen::{generate, Preset, SyntheticSpec};

/// One dataset entry. Exactly one source is given: a shipped `preset`, a
/// `synthetic` spec file, or a `data` file with its `schema`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
    /// Rows to generate for synthetic sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Generation seed for synthetic sources; derived from the master seed
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_seed: Option<u64>,
    /// Defaults to 0.4 for synthetic sources; required for data files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_proportion: Option<f64>,
    /// Defaults to 4 for synthetic sources; required for data files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

impl DatasetConfig {
    pub fn preset(name: impl Into<String>, preset: Preset, n: usize) -> Self {
        Self {
            name: name.into(),
            preset: Some(preset),
            synthetic: None,
            data: None,
            schema: None,
            n: Some(n),
            generation_seed: None,
            train_proportion: None,
            repetitions: None,
        }
    }

    fn is_synthetic(&self) -> bool {
        self.preset.is_some() || self.synthetic.is_some()
    }

    fn validate(&self) -> Result<()> {
        let sources = [self.preset.is_some(), self.synthetic.is_some(), self.data.is_some()]
            .into_iter()
            .filter(|&s| s)
            .count();
        if sources != 1 {
            return Err(Error::Config(format!(
                "dataset `{}` needs exactly one of preset, synthetic or data",
                self.name
            )));
        }
        if self.data.is_some() != self.schema.is_some() {
            return Err(Error::Config(format!(
                "dataset `{}`: data and schema go together",
                self.name
            )));
        }
        if !self.is_synthetic() && (self.train_proportion.is_none() || self.repetitions.is_none()) {
            return Err(Error::Config(format!(
                "dataset `{}` needs train_proportion and repetitions",
                self.name
            )));
        }
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(Error::Config(format!("invalid dataset name {:?}", self.name)));
        }
        Ok(())
    }
}

fn default_seed() -> u64 {
    0
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_lambda_points() -> usize {
    21
}
fn default_tau_points() -> usize {
    101
}
fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}
fn default_folds() -> usize {
    3
}
fn default_max_failed() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_lambda_points")]
    pub lambda_points: usize,
    #[serde(default = "default_tau_points")]
    pub tau_points: usize,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_folds")]
    pub tuning_folds: usize,
    /// Largest tolerated fraction of failed (λ, repetition) cells per pipeline.
    #[serde(default = "default_max_failed")]
    pub max_failed_fraction: f64,
    /// Also write per-cell fit durations (not reproducible byte-for-byte).
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub pipelines: Vec<Pipeline>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            output_dir: default_output(),
            lambda_points: default_lambda_points(),
            tau_points: default_tau_points(),
            policies: default_policies(),
            policy: Policy::default(),
            tuning_folds: default_folds(),
            max_failed_fraction: default_max_failed(),
            record_timings: false,
            datasets: Vec::new(),
            pipelines: Vec::new(),
            base_dir: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        uniform_grid(self.lambda_points)
    }

    pub fn tau_grid(&self) -> Vec<f64> {
        uniform_grid(self.tau_points)
    }

    pub fn policy(&self, kind: PolicyKind) -> Policy {
        Policy { kind, ..self.policy }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_points < 2 || self.tau_points < 2 {
            return Err(Error::Config("λ and τ grids need at least 2 points".into()));
        }
        self.policy.validate()?;
        if self.policies.contains(&PolicyKind::Argmax)
            && !self.tau_grid().contains(&self.policy.argmax_threshold)
        {
            return Err(Error::Config(format!(
                "argmax threshold {} is not on the τ grid",
                self.policy.argmax_threshold
            )));
        }
        if self.tuning_folds < 2 {
            return Err(Error::Config("tuning needs at least 2 folds".into()));
        }
        if !(0.0..=1.0).contains(&self.max_failed_fraction) {
            return Err(Error::Config("max_failed_fraction outside [0, 1]".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for d in &self.datasets {
            d.validate()?;
            if !names.insert(&d.name) {
                return Err(Error::Config(format!("duplicate dataset `{}`", d.name)));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.pipelines {
            p.validate()?;
            if !names.insert(&p.name) {
                return Err(Error::Config(format!("duplicate pipeline `{}`", p.name)));
            }
        }
        Ok(())
    }

    /// Loads (or generates) dataset `index` and returns it with its split plan.
    pub fn load_dataset(&self, index: usize) -> Result<(Dataset, SplitPlan)> {
        let d = &self.datasets[index];
        let generation_seed = d
            .generation_seed
            .unwrap_or_else(|| derive_seed(self.seed, &[index as u64, name_tag("generate")]));
        let dataset = if let Some(preset) = d.preset {
            generate(&preset.spec(d.n.unwrap_or(10_000), generation_seed))?
        } else if let Some(path) = &d.synthetic {
            let text = read(&self.resolve(path))?;
            let spec = SyntheticSpec::from_toml(&text)?;
            let n = d.n.unwrap_or(spec.n);
            generate(&SyntheticSpec {
                n,
                seed: generation_seed,
                ..spec
            })?
        } else {
            let schema_path = self.resolve(d.schema.as_ref().expect("validated"));
            let schema = DatasetSchema::from_toml(&read(&schema_path)?)?;
            let data_path = self.resolve(d.data.as_ref().expect("validated"));
            if !data_path.exists() {
                return Err(Error::NotFound(data_path));
            }
            load_tabular(&data_path, &schema)?
        };
        let plan = SplitPlan::new(
            d.train_proportion.unwrap_or(0.4),
            d.repetitions.unwrap_or(4),
            derive_seed(self.seed, &[index as u64, name_tag("split")]),
        )
        .map_err(|e| Error::Config(format!("dataset `{}`: {e}", d.name)))?;
        Ok((dataset, plan))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerKind;

    const EXAMPLE: &str = r#"
seed = 11
output_dir = "out"
lambda_points = 5
tau_points = 11
policies = ["argmax", "free"]

[policy]
ppr_target = 0.25

[[datasets]]
name = "sp"
preset = "S-P"
n = 400

[[pipelines]]
name = "lr"
learner = "logistic"

[[pipelines]]
name = "repair-lr"
learner = "logistic"
intervention = { kind = "repair" }

[[pipelines]]
name = "fs-trees"
learner = "tree_ensemble"
intervention = { kind = "feature-select", k = 6 }
grid = [{ n_trees = 10, max_depth = 3 }]
"#;

    #[test]
    fn parses_and_round_trips() {
        let config = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(config.seed, 11);
        assert_eq!(config.lambda_grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(config.policy(PolicyKind::Ppr).ppr_target, 0.25);
        assert_eq!(config.policy(PolicyKind::Ppr).ppr_tolerance, 0.03);
        assert_eq!(config.pipelines[2].search_grid()[0].kind, LearnerKind::TreeEnsemble);
        assert_eq!(config.pipelines[2].search_grid()[0].n_trees, 10);
        let back = ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn defaults_follow_the_benchmark_protocol() {
        let config = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(config.lambda_grid().len(), 21);
        assert_eq!(config.tau_grid().len(), 101);
        assert_eq!(config.tau_grid()[50], 0.5);
        assert_eq!(config.policies.len(), 3);
    }

    #[test]
    fn loads_presets_with_default_split() {
        let config = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        let (data, plan) = config.load_dataset(0).unwrap();
        assert_eq!(data.n(), 400);
        assert_eq!((plan.train_proportion, plan.repetitions), (0.4, 4));
        assert_eq!(config.load_dataset(0).unwrap().0, data);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "lambda_points = 1",
            "unknown_key = 3",
            "tau_points = 10",
            "[[datasets]]\nname = \"a\"",
            "[[datasets]]\nname = \"a\"\ndata = \"x.csv\"\nschema = \"s.toml\"",
            "[[datasets]]\nname = \"a\"\npreset = \"S-D\"\n[[datasets]]\nname = \"a\"\npreset = \"S-P\"",
            "[[pipelines]]\nname = \"p\"\nlearner = \"fair_logistic\"\nintervention = { kind = \"reweigh\" }",
            "[[pipelines]]\nname = \"p\"\nlearner = \"perceptron\"",
        ] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
    }

    #[test]
    fn missing_data_file_is_not_found() {
        let text = "[[datasets]]\nname = \"a\"\ndata = \"nowhere.csv\"\nschema = \"nowhere.toml\"\ntrain_proportion = 0.5\nrepetitions = 2";
        let config = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(config.load_dataset(0), Err(Error::NotFound(_))));
    }
}
