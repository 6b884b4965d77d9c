//! Feature matrix assembly and the classifiers trained on it.

mod dataset;
mod eval;
mod forest;
mod knn;
mod tree;

pub use dataset::{build_feature_matrix, Dataset, FeatureBuild, SkipEntry, TweetFeatures, FEATURE_NAMES, N_FEATURES};
pub use eval::{cross_validate, evaluate, stratified_folds, CvReport, EvalMetrics, MetricSummary};
pub use forest::{train_forest, ForestModel, ForestParams, ForestVariant};
pub use knn::{knn_predict, KnnModel};
pub use tree::{train_tree, Node, Split, TreeModel, TreeParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped whenever a serialized artifact changes shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("no usable rows")]
    NoRows,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("row {row} has {found} features, expected {expected}")]
    FeatureCount { row: usize, expected: usize, found: usize },
    #[error("input has {found} features, model expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("feature names do not match the schema: {0}")]
    SchemaMismatch(String),
    #[error("need at least {min} rows, got {rows}")]
    TooFewRows { rows: usize, min: usize },
    #[error("a forest needs at least one tree")]
    NoTrees,
    #[error("k = {k} but only {n} training rows")]
    BadK { k: usize, n: usize },
    #[error("fold count {folds} invalid for {n} rows")]
    BadFolds { folds: usize, n: usize },
    #[error("class {class} has {count} rows, too few to stratify")]
    ClassTooSmall { class: &'static str, count: usize },
    #[error("AUC undefined: only one class present")]
    AucUndefined,
    #[error("no features left to train on")]
    NoFeatures,
    #[error("feature CSV: {0}")]
    Csv(String),
}

pub(crate) fn class_name(positive: bool) -> &'static str {
    if positive {
        "misleading"
    } else {
        "non-misleading"
    }
}

/// What to train; the seed comes separately so one spec can be reused
/// across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Tree(TreeParams),
    Forest(ForestParams),
    Knn { k: usize },
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Tree(_) => "DT".into(),
            ModelSpec::Forest(p) => p.variant.short().into(),
            ModelSpec::Knn { .. } => "KNN".into(),
        }
    }

    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<Model, LearnError> {
        Ok(match self {
            ModelSpec::Tree(p) => Model::Tree(train_tree(data, p, seed)?),
            ModelSpec::Forest(p) => Model::Forest(train_forest(data, &ForestParams { seed, ..p.clone() })?),
            ModelSpec::Knn { k } => Model::Knn(KnnModel::fit(data, *k)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Tree(TreeModel),
    Forest(ForestModel),
    Knn(KnnModel),
}

impl Model {
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        match self {
            Model::Tree(t) => t.predict_proba(x),
            Model::Forest(f) => f.predict_proba(x),
            Model::Knn(k) => k.predict_proba(x),
        }
    }

    /// Trees making up the model, if it is tree based.
    pub fn trees(&self) -> Option<Vec<&TreeModel>> {
        match self {
            Model::Tree(t) => Some(vec![t]),
            Model::Forest(f) => Some(f.trees.iter().collect()),
            Model::Knn(_) => None,
        }
    }
}

/// Serialized model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub spec: ModelSpec,
    pub seed: u64,
    /// Fraction of the balanced rows held out from training, if any.
    #[serde(default)]
    pub test_fraction: Option<f64>,
    pub model: Model,
}
