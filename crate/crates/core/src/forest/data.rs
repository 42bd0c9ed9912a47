use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::cohort::{Field, FieldKind, TransplantRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Boolean,
    /// Levels are fixed before training; unseen levels at prediction time
    /// fall to the right branch of every categorical split.
    Categorical {
        levels: Vec<i64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }
}

/// Column-major training matrix with binary labels (`true` = graft failure).
#[derive(Debug, Clone)]
pub struct Dataset {
    specs: Vec<FeatureSpec>,
    columns: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl Dataset {
    /// Builds a dataset from row-major values. Every row must have one value
    /// per spec, all finite.
    pub fn new(
        specs: Vec<FeatureSpec>,
        rows: &[Vec<f64>],
        labels: Vec<bool>,
    ) -> Result<Self, ForestError> {
        if rows.len() != labels.len() {
            return Err(ForestError::Shape(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let p = specs.len();
        if p == 0 {
            return Err(ForestError::Shape("no features".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(ForestError::Shape(format!(
                    "row {i} has {} values, expected {p}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ForestError::Shape(format!(
                        "row {i}, `{}` is not finite",
                        specs[j].name
                    )));
                }
                columns[j].push(v);
            }
        }
        Ok(Dataset {
            specs,
            columns,
            labels,
        })
    }

    /// Extracts `fields` from labeled records. Categorical levels are the
    /// sorted distinct codes seen here.
    pub fn from_records<'a>(
        fields: &[Field],
        labeled: impl IntoIterator<Item = (&'a TransplantRecord, bool)>,
    ) -> Result<Self, ForestError> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (r, y) in labeled {
            rows.push(record_row(fields, r)?);
            labels.push(y);
        }
        let specs = fields
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let kind = match f.kind() {
                    FieldKind::Boolean => FeatureKind::Boolean,
                    FieldKind::Categorical => {
                        let mut levels: Vec<i64> = rows.iter().map(|r| r[j] as i64).collect();
                        levels.sort_unstable();
                        levels.dedup();
                        FeatureKind::Categorical { levels }
                    }
                    _ => FeatureKind::Numeric,
                };
                FeatureSpec {
                    name: f.name().to_string(),
                    kind,
                }
            })
            .collect();
        Dataset::new(specs, &rows, labels)
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn n_features(&self) -> usize {
        self.specs.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// The given rows, in the given order, with the same feature specs.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            specs: self.specs.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Feature vector of a record in `fields` order.
pub fn record_row(fields: &[Field], r: &TransplantRecord) -> Result<Vec<f64>, ForestError> {
    fields
        .iter()
        .map(|&f| {
            r.feature_value(f)
                .ok_or_else(|| ForestError::MissingFeature {
                    feature: f.name().to_string(),
                })
        })
        .collect()
}
