//! Balanced-bootstrap random forest.
//!
//! Every tree is grown to exhaustion on its own 1:1 resample of the training
//! set, splitting on Gini impurity decrease over a random feature subset at
//! each node. The forest's output for a record is the fraction of trees
//! voting graft failure.
//!
//! Tree `i` draws all of its randomness from a generator seeded by
//! `(master_seed, i)`, and trees are combined in index order, so a trained
//! model is bit-for-bit independent of the rayon pool size. A side effect is
//! that the first `k` trees of an `n`-tree forest are exactly a `k`-tree
//! forest with the same seed, which [`ForestModel::truncated`] exploits.

mod data;
mod split;
mod tree;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::{record_row, Dataset, FeatureKind, FeatureSpec};
pub use split::{best_split, gini_impurity, Split, SplitTest, EXHAUSTIVE_LEVEL_LIMIT};
pub use tree::{balanced_bootstrap, grow_tree, Tree, TreeNode};

use crate::cohort::{Field, TransplantRecord};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("degenerate class balance: {positives} positives, {negatives} negatives")]
    DegenerateBalance { positives: usize, negatives: usize },
    #[error("empty node")]
    EmptyNode,
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("data shape: {0}")]
    Shape(String),
    #[error("record has no value for feature `{feature}`")]
    MissingFeature { feature: String },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    /// Smallest allowed child size.
    pub min_node: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 1000,
            mtry: None,
            min_node: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
    }

    fn validate(&self, p: usize) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::Params("n_trees must be >= 1".into()));
        }
        let m = self.resolved_mtry(p);
        if m == 0 || m > p {
            return Err(ForestError::Params(format!("mtry {m} outside 1..={p}")));
        }
        if self.min_node == 0 {
            return Err(ForestError::Params("min_node must be >= 1".into()));
        }
        Ok(())
    }
}

pub const MODEL_FORMAT: &str = "graftrisk-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub version: u32,
    pub params: ForestParams,
    pub features: Vec<FeatureSpec>,
    /// Mean over trees of the node-weighted Gini decrease per feature.
    pub importance: Vec<f64>,
    pub trees: Vec<Tree>,
}

pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel, ForestError> {
    let p = data.n_features();
    params.validate(p)?;
    let pos = data.positives();
    if pos == 0 || data.len() - pos < pos {
        return Err(ForestError::DegenerateBalance {
            positives: pos,
            negatives: data.len() - pos,
        });
    }
    let mtry = params.resolved_mtry(p);
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(params.seed, i as u64);
            let sample = balanced_bootstrap(data.labels(), &mut rng)?;
            grow_tree(data, &sample, mtry, params.min_node, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let importance = mean_importance(&trees, p);
    Ok(ForestModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        params: params.clone(),
        features: data.specs().to_vec(),
        importance,
        trees,
    })
}

fn mean_importance(trees: &[Tree], p: usize) -> Vec<f64> {
    let mut acc = vec![0.0; p];
    for t in trees {
        for (a, v) in acc.iter_mut().zip(&t.importance) {
            *a += v;
        }
    }
    let n = trees.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    acc
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn positive_votes(&self, x: &[f64]) -> Result<usize, ForestError> {
        if x.len() != self.features.len() {
            return Err(ForestError::Shape(format!(
                "expected {} feature values, got {}",
                self.features.len(),
                x.len()
            )));
        }
        Ok(self.trees.iter().filter(|t| t.vote(x)).count())
    }

    /// Fraction of trees voting graft failure.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ForestError> {
        Ok(self.positive_votes(x)? as f64 / self.trees.len() as f64)
    }

    /// Record fields matching the model's feature names, in model order.
    pub fn fields(&self) -> Result<Vec<Field>, ForestError> {
        self.features
            .iter()
            .map(|s| {
                Field::from_name(&s.name).ok_or_else(|| ForestError::MissingFeature {
                    feature: s.name.clone(),
                })
            })
            .collect()
    }

    pub fn predict_record(&self, record: &TransplantRecord) -> Result<f64, ForestError> {
        let fields = self.fields()?;
        self.predict_proba(&record_row(&fields, record)?)
    }

    /// The first `n_trees` trees; equal to training with that count.
    pub fn truncated(&self, n_trees: usize) -> ForestModel {
        let n = n_trees.clamp(1, self.trees.len());
        let trees = self.trees[..n].to_vec();
        ForestModel {
            format: self.format.clone(),
            version: self.version,
            params: ForestParams {
                n_trees: n,
                ..self.params.clone()
            },
            features: self.features.clone(),
            importance: mean_importance(&trees, self.features.len()),
            trees,
        }
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<(), ForestError> {
        serde_json::to_writer(w, self).map_err(|e| ForestError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self, ForestError> {
        let m: ForestModel =
            serde_json::from_reader(r).map_err(|e| ForestError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(ForestError::Format(format!(
                "not a forest model: {}",
                m.format
            )));
        }
        if m.version != MODEL_VERSION {
            return Err(ForestError::Format(format!(
                "unsupported version {}",
                m.version
            )));
        }
        if m.trees.is_empty() || m.importance.len() != m.features.len() {
            return Err(ForestError::Format("inconsistent model".into()));
        }
        Ok(m)
    }
}

/// Features ranked by importance, descending; ties by name.
pub fn variable_importance(model: &ForestModel) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = model
        .features
        .iter()
        .zip(&model.importance)
        .map(|(s, &v)| (s.name.clone(), v))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}
