//! Random forests and softmax gradient boosting over [`Tree`]s.
//!
//! Every tree stores leaf vectors as wide as the class count, so both model
//! kinds share one representation:
//!
//! * random forest: raw output = mean of tree outputs (class probabilities);
//! * gradient boosting: raw output = `base_value + sum of tree outputs`
//!   (per-class scores), and probabilities are the softmax of the scores
//!   clamped to `[-30, 30]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, MaxFeatures, Target, Tree, TreeParams};
use super::{check_training_data, ForestError};
use crate::matrix::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Scores are clamped to this magnitude before the softmax.
pub const SCORE_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub format_version: u32,
    pub kind: EnsembleKind,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    /// Additive score offset; zero for forests, log class priors for boosting.
    pub base_value: Vec<f64>,
    pub trees: Vec<Tree>,
    pub seed: u64,
}

impl TreeEnsemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<(), ForestError> {
        if row.len() != self.n_features() {
            return Err(ForestError::FeatureCountMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(())
    }

    /// Class probabilities for a forest, per-class scores for boosting.
    /// This is the quantity SHAP attributions add up to.
    pub fn raw_output(&self, row: &[f64]) -> Result<Vec<f64>, ForestError> {
        self.check_row(row)?;
        let mut out = self.base_value.clone();
        match self.kind {
            EnsembleKind::RandomForest => {
                let scale = 1.0 / self.trees.len().max(1) as f64;
                for t in &self.trees {
                    for (o, v) in out.iter_mut().zip(t.predict(row)) {
                        *o += scale * v;
                    }
                }
            }
            EnsembleKind::GradientBoosting => {
                for t in &self.trees {
                    for (o, v) in out.iter_mut().zip(t.predict(row)) {
                        *o += v;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, ForestError> {
        let raw = self.raw_output(row)?;
        match self.kind {
            EnsembleKind::RandomForest => Ok(raw.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()),
            EnsembleKind::GradientBoosting => softmax(&raw),
        }
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, row: &[f64]) -> Result<usize, ForestError> {
        Ok(argmax(&self.predict_proba(row)?))
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<usize>, ForestError> {
        x.rows_iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        let model: TreeEnsemble = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ForestError::UnsupportedVersion(model.format_version));
        }
        for t in &model.trees {
            t.validate()?;
            if t.max_feature_index().is_some_and(|f| f >= model.n_features()) {
                return Err(ForestError::InvalidModel("feature index out of range".into()));
            }
            if t.n_outputs() != model.n_classes {
                return Err(ForestError::InvalidModel("leaf width != class count".into()));
            }
        }
        Ok(model)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax of scores clamped to `±SCORE_CLAMP`.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>, ForestError> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(ForestError::NonFiniteGradient);
    }
    let clamped: Vec<f64> = scores.iter().map(|s| s.clamp(-SCORE_CLAMP, SCORE_CLAMP)).collect();
    let m = clamped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = clamped.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / z).collect())
}

/// Independent RNG for `(seed, stream)`.
pub fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 12,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Trains bootstrap-sampled Gini trees in parallel. Tree `t` draws from the
/// ChaCha stream `t + 1` of the master seed, so the result does not depend
/// on thread scheduling.
pub fn train_random_forest(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    feature_names: &[String],
    params: &ForestParams,
) -> Result<TreeEnsemble, ForestError> {
    check_training_data(x, y, n_classes)?;
    check_names(x, feature_names)?;
    if params.n_trees == 0 {
        return Err(ForestError::InvalidParams("n_trees must be >= 1".into()));
    }
    let n = x.n_rows();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: params.max_features,
    };
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(params.seed, t as u64 + 1);
            let samples = if params.bootstrap {
                let mut counts = vec![0u32; n];
                for _ in 0..n {
                    counts[rng.random_range(0..n)] += 1;
                }
                counts
                    .into_iter()
                    .enumerate()
                    .filter(|&(_, c)| c > 0)
                    .map(|(i, c)| (i, c as f64))
                    .collect()
            } else {
                (0..n).map(|i| (i, 1.0)).collect()
            };
            fit_tree(x, samples, Target::Classes { y, n_classes }, tree_params, &mut rng)
        })
        .collect();
    Ok(TreeEnsemble {
        format_version: MODEL_FORMAT_VERSION,
        kind: EnsembleKind::RandomForest,
        n_classes,
        feature_names: feature_names.to_vec(),
        base_value: vec![0.0; n_classes],
        trees,
        seed: params.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// L2 damping added to the hessian sum of each leaf.
    pub l2: f64,
    pub seed: u64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 1,
            l2: 1.0,
            seed: 0,
        }
    }
}

/// Class priors floored at 1e-12 so their logs stay finite.
fn log_priors(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n_classes];
    for &c in y {
        counts[c] += 1.0;
    }
    counts.iter().map(|c| (c / y.len() as f64).max(1e-12).ln()).collect()
}

/// One-vs-rest softmax boosting: each round fits one regression tree per
/// class to the cross-entropy residual `onehot - p`, with Newton leaf steps
/// scaled by the learning rate.
pub fn train_gradient_boosting(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    feature_names: &[String],
    params: &BoostingParams,
) -> Result<TreeEnsemble, ForestError> {
    check_training_data(x, y, n_classes)?;
    check_names(x, feature_names)?;
    if !(params.learning_rate.is_finite() && params.learning_rate >= 0.0) {
        return Err(ForestError::InvalidParams("learning_rate must be >= 0".into()));
    }
    if !(params.l2.is_finite() && params.l2 >= 0.0) {
        return Err(ForestError::InvalidParams("l2 must be >= 0".into()));
    }
    let n = x.n_rows();
    let base = log_priors(y, n_classes);
    let mut scores: Vec<Vec<f64>> = vec![base.clone(); n];
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: MaxFeatures::All,
    };
    let mut trees = Vec::with_capacity(params.n_rounds * n_classes);
    for round in 0..params.n_rounds {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect::<Result<_, _>>()?;
        let round_trees: Vec<Tree> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let residual: Vec<f64> = (0..n).map(|i| f64::from(u8::from(y[i] == k)) - probs[i][k]).collect();
                let hessian: Vec<f64> = probs.iter().map(|p| p[k] * (1.0 - p[k])).collect();
                let mut rng = derived_rng(params.seed, (round * n_classes + k) as u64 + 1);
                let target = Target::Gradient {
                    residual: &residual,
                    hessian: &hessian,
                    l2: params.l2,
                    scale: params.learning_rate,
                    output: k,
                    n_outputs: n_classes,
                };
                fit_tree(x, (0..n).map(|i| (i, 1.0)).collect(), target, tree_params, &mut rng)
            })
            .collect();
        for t in &round_trees {
            for (i, s) in scores.iter_mut().enumerate() {
                for (o, v) in s.iter_mut().zip(t.predict(x.row(i))) {
                    *o += v;
                }
            }
        }
        if scores.iter().flatten().any(|s| !s.is_finite()) {
            return Err(ForestError::NonFiniteGradient);
        }
        trees.extend(round_trees);
    }
    Ok(TreeEnsemble {
        format_version: MODEL_FORMAT_VERSION,
        kind: EnsembleKind::GradientBoosting,
        n_classes,
        feature_names: feature_names.to_vec(),
        base_value: base,
        trees,
        seed: params.seed,
    })
}

fn check_names(x: &Matrix, names: &[String]) -> Result<(), ForestError> {
    if names.len() != x.n_cols() {
        return Err(ForestError::FeatureCountMismatch {
            expected: x.n_cols(),
            got: names.len(),
        });
    }
    Ok(())
}

/// Mean multiclass cross-entropy of the model on `(x, y)`.
pub fn log_loss(model: &TreeEnsemble, x: &Matrix, y: &[usize]) -> Result<f64, ForestError> {
    let mut total = 0.0;
    for (row, &c) in x.rows_iter().zip(y) {
        total -= model.predict_proba(row)?[c].max(1e-15).ln();
    }
    Ok(total / y.len() as f64)
}
