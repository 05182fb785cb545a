//! CART trees, random forests, gradient boosting and cross-validation.

pub mod cv;
pub mod ensemble;
pub mod metrics;
pub mod tree;

use thiserror::Error;

use crate::matrix::Matrix;

pub use cv::{cross_validate, stratified_kfold, CvOutcome, FoldResult, ModelSpec, Scenario, ScenarioSpec};
pub use ensemble::{
    argmax, softmax, train_gradient_boosting, train_random_forest, BoostingParams, EnsembleKind, ForestParams,
    TreeEnsemble,
};
pub use metrics::{evaluate, CvReport, Metrics};
pub use tree::{train_tree, MaxFeatures, Node, Tree, TreeParams};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("expected {expected} features, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("class {class} has {count} samples, fewer than k={k}")]
    ClassTooSmall { class: usize, count: usize, k: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("non-finite gradient or score")]
    NonFiniteGradient,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_training_data(x: &Matrix, y: &[usize], n_classes: usize) -> Result<(), ForestError> {
    if x.n_rows() != y.len() {
        return Err(ForestError::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_rows() < 2 {
        return Err(ForestError::TooFewSamples(x.n_rows()));
    }
    if x.n_cols() == 0 {
        return Err(ForestError::EmptyInput);
    }
    if n_classes < 2 {
        return Err(ForestError::InvalidParams("need at least 2 classes".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(ForestError::UnknownLabel(format!("class {bad}")));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(ForestError::InvalidParams("non-finite feature value".into()));
    }
    Ok(())
}
