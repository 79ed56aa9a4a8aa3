//! CSV ingestion driven by a TOML schema.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ColumnKind,
}

/// Imputation rule per column kind. Statistics come from the loaded file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPolicy {
    /// Cell contents treated as missing.
    #[serde(default = "default_missing_tokens")]
    pub tokens: Vec<String>,
}

fn default_missing_tokens() -> Vec<String> {
    vec!["".into(), "?".into(), "NA".into()]
}

impl Default for MissingPolicy {
    fn default() -> Self {
        Self {
            tokens: default_missing_tokens(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub target_column: String,
    pub target_favourable_value: String,
    pub protected_column: String,
    pub privileged_values: BTreeSet<String>,
    pub features: Vec<FeatureColumn>,
    #[serde(default)]
    pub missing: MissingPolicy,
}

impl DatasetSchema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for f in &self.features {
            if f.name == self.target_column || f.name == self.protected_column {
                return Err(Error::Schema(format!(
                    "column `{}` is both a feature and the target/protected column",
                    f.name
                )));
            }
        }
        if self.target_column == self.protected_column {
            return Err(Error::Schema("target and protected column coincide".into()));
        }
        Ok(())
    }
}

/// Reads a header-bearing comma-delimited file into a [`Dataset`].
///
/// Categorical columns are one-hot encoded keeping every level (sorted
/// lexicographically, named `column=level`). Missing numeric cells take the
/// column median, missing categorical cells the column mode.
pub fn load_tabular(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let target_idx = position(&schema.target_column)?;
    let protected_idx = position(&schema.protected_column)?;
    let feature_idx = schema
        .features
        .iter()
        .map(|f| position(&f.name))
        .collect::<Result<Vec<_>>>()?;

    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(Error::Input(format!("{} has no data rows", path.display())));
    }
    let is_missing = |cell: &str| schema.missing.tokens.iter().any(|t| t == cell);

    let mut labels = Vec::with_capacity(rows.len());
    let mut protected = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let target = &row[target_idx];
        let group = &row[protected_idx];
        if is_missing(target) || is_missing(group) {
            return Err(Error::Input(format!(
                "row {}: target or protected value missing",
                r + 1
            )));
        }
        labels.push(u8::from(target == schema.target_favourable_value));
        protected.push(u8::from(schema.privileged_values.contains(group)));
    }
    for (column, values) in [
        (&schema.target_column, &labels),
        (&schema.protected_column, &protected),
    ] {
        let distinct = values.iter().collect::<BTreeSet<_>>().len();
        if distinct != 2 {
            return Err(Error::Cardinality {
                column: column.clone(),
                distinct,
            });
        }
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for (spec, &idx) in schema.features.iter().zip(&feature_idx) {
        let cells: Vec<&str> = rows.iter().map(|row| &row[idx]).collect();
        match spec.kind {
            ColumnKind::Numeric => {
                let parsed = cells
                    .iter()
                    .enumerate()
                    .map(|(r, c)| {
                        if is_missing(c) {
                            Ok(None)
                        } else {
                            c.parse::<f64>().map(Some).map_err(|_| {
                                Error::Input(format!(
                                    "row {}: `{}` in numeric column `{}`",
                                    r + 1,
                                    c,
                                    spec.name
                                ))
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let present: Vec<f64> = parsed.iter().flatten().copied().collect();
                if present.is_empty() {
                    return Err(Error::Input(format!("column `{}` is entirely missing", spec.name)));
                }
                let fill = median(&present);
                columns.push(parsed.into_iter().map(|v| v.unwrap_or(fill)).collect());
                names.push(spec.name.clone());
            }
            ColumnKind::Categorical => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for c in cells.iter().filter(|c| !is_missing(c)) {
                    *counts.entry(c).or_default() += 1;
                }
                // BTreeMap iteration is sorted, so ties go to the smallest level.
                let mode = counts
                    .iter()
                    .fold(None::<(&str, usize)>, |best, (&k, &v)| match best {
                        Some((_, bv)) if bv >= v => best,
                        _ => Some((k, v)),
                    })
                    .map(|(k, _)| k)
                    .ok_or_else(|| {
                        Error::Input(format!("column `{}` is entirely missing", spec.name))
                    })?;
                for level in counts.keys() {
                    columns.push(
                        cells
                            .iter()
                            .map(|c| {
                                let v = if is_missing(c) { mode } else { c };
                                if v == *level {
                                    1.0
                                } else {
                                    0.0
                                }
                            })
                            .collect(),
                    );
                    names.push(format!("{}={}", spec.name, level));
                }
            }
        }
    }

    let n = rows.len();
    let d = columns.len();
    let features = Array2::from_shape_fn((n, d), |(i, j)| columns[j][i]);
    Dataset::new(features, protected, labels, names)
}

/// Column holding the protected attribute in files written by [`write_tabular`].
pub const PROTECTED_COLUMN: &str = "group";
/// Column holding the target in files written by [`write_tabular`].
pub const TARGET_COLUMN: &str = "label";

/// Writes `dataset` as CSV (features, then `group` and `label` as 0/1) and
/// returns the schema that loads it back unchanged.
///
/// Values use the shortest representation that round-trips, so
/// `load_tabular(path, &schema)` reproduces the features bit for bit.
pub fn write_tabular(dataset: &Dataset, path: &Path) -> Result<DatasetSchema> {
    let schema = DatasetSchema {
        target_column: TARGET_COLUMN.into(),
        target_favourable_value: "1".into(),
        protected_column: PROTECTED_COLUMN.into(),
        privileged_values: ["1".to_string()].into(),
        features: dataset
            .feature_names()
            .iter()
            .map(|name| FeatureColumn {
                name: name.clone(),
                kind: ColumnKind::Numeric,
            })
            .collect(),
        missing: MissingPolicy::default(),
    };
    schema.validate()?;
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(
        dataset
            .feature_names()
            .iter()
            .map(String::as_str)
            .chain([PROTECTED_COLUMN, TARGET_COLUMN]),
    )?;
    for (i, row) in dataset.features().rows().into_iter().enumerate() {
        writer.write_record(
            row.iter()
                .map(|v| v.to_string())
                .chain([dataset.protected()[i].to_string(), dataset.labels()[i].to_string()]),
        )?;
    }
    writer.flush()?;
    Ok(schema)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
