//! Tree SHAP attributions for tree ensembles, their global aggregation, and
//! Wasserstein separability of class-conditional attributions.

pub mod treeshap;
pub mod wasserstein;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{EnsembleKind, TreeEnsemble};
use crate::matrix::Matrix;

pub use treeshap::{tree_shap, tree_shap_into};
pub use wasserstein::{wasserstein_1d, wd_report, WdReport};

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("node {node} has no usable cover")]
    MissingCover { node: usize },
    #[error("schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("no folds to aggregate")]
    EmptyFolds,
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value")]
    NonFiniteValue,
    #[error("only one class present")]
    SingleClassData,
    #[error("binary view requested for a {0}-class model")]
    NotBinary(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The space attributions add up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapSpace {
    Probability,
    Margin,
}

impl ShapSpace {
    pub fn for_kind(kind: EnsembleKind) -> Self {
        match kind {
            EnsembleKind::RandomForest => ShapSpace::Probability,
            EnsembleKind::GradientBoosting => ShapSpace::Margin,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapSpace::Probability => "probability",
            ShapSpace::Margin => "margin",
        }
    }
}

/// Attributions laid out `[sample][feature][class]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub values: Vec<f64>,
    pub base_values: Vec<f64>,
    pub space: ShapSpace,
    pub feature_names: Vec<String>,
    /// Input rows the attributions explain.
    pub data: Matrix,
    pub sample_ids: Vec<String>,
}

impl ShapMatrix {
    pub fn value(&self, s: usize, f: usize, k: usize) -> f64 {
        self.values[(s * self.n_features + f) * self.n_classes + k]
    }

    /// Base value plus the attribution sum for sample `s`, class `k`.
    pub fn reconstruct(&self, s: usize, k: usize) -> f64 {
        self.base_values[k] + (0..self.n_features).map(|f| self.value(s, f, k)).sum::<f64>()
    }

    /// Attribution toward `positive` in a two-class model: the positive
    /// class probability for forests, the log-odds for boosting.
    pub fn binary_value(&self, s: usize, f: usize, positive: usize) -> f64 {
        match self.space {
            ShapSpace::Probability => self.value(s, f, positive),
            ShapSpace::Margin => self.value(s, f, positive) - self.value(s, f, 1 - positive),
        }
    }

    pub fn binary_base(&self, positive: usize) -> f64 {
        match self.space {
            ShapSpace::Probability => self.base_values[positive],
            ShapSpace::Margin => self.base_values[positive] - self.base_values[1 - positive],
        }
    }

    /// Samples x features matrix of [`Self::binary_value`].
    pub fn binary_view(&self, positive: usize) -> Result<Matrix, ShapError> {
        if self.n_classes != 2 || positive > 1 {
            return Err(ShapError::NotBinary(self.n_classes));
        }
        let mut m = Matrix::zeros(self.n_samples, self.n_features);
        for s in 0..self.n_samples {
            for f in 0..self.n_features {
                m.set(s, f, self.binary_value(s, f, positive));
            }
        }
        Ok(m)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize, ShapError> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ShapError::UnknownFeature(name.to_string()))
    }

    /// Writes `sample_id,feature,class,shap_value` rows after `# ` preamble lines.
    pub fn write_csv<W: Write>(&self, w: W, class_names: &[&str], preamble: &[String]) -> Result<(), ShapError> {
        write_shap_csv(std::slice::from_ref(self), w, class_names, preamble)
    }

    fn write_rows<W: Write>(&self, w: &mut W, class_names: &[&str]) -> Result<(), ShapError> {
        for s in 0..self.n_samples {
            for f in 0..self.n_features {
                for k in 0..self.n_classes {
                    let class = class_names.get(k).copied().unwrap_or("?");
                    writeln!(
                        w,
                        "{},{},{},{}",
                        self.sample_ids[s],
                        self.feature_names[f],
                        class,
                        self.value(s, f, k)
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Writes several attribution blocks (e.g. one per fold) under a single header.
pub fn write_shap_csv<W: Write>(
    blocks: &[ShapMatrix],
    mut w: W,
    class_names: &[&str],
    preamble: &[String],
) -> Result<(), ShapError> {
    for line in preamble {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "sample_id,feature,class,shap_value")?;
    for b in blocks {
        b.write_rows(&mut w, class_names)?;
    }
    Ok(())
}

/// Attributions for every row of `x`. Forest attributions are the mean of
/// per-tree attributions; boosting attributions are their sum.
pub fn ensemble_shap(model: &TreeEnsemble, x: &Matrix, sample_ids: Vec<String>) -> Result<ShapMatrix, ShapError> {
    let nf = model.n_features();
    if x.n_cols() != nf {
        return Err(ShapError::SchemaMismatch {
            expected: nf,
            got: x.n_cols(),
        });
    }
    if sample_ids.len() != x.n_rows() {
        return Err(ShapError::SchemaMismatch {
            expected: x.n_rows(),
            got: sample_ids.len(),
        });
    }
    let k = model.n_classes;
    for t in &model.trees {
        if t.n_outputs() != k {
            return Err(ShapError::SchemaMismatch {
                expected: k,
                got: t.n_outputs(),
            });
        }
    }
    let scale = match model.kind {
        EnsembleKind::RandomForest => 1.0 / model.trees.len().max(1) as f64,
        EnsembleKind::GradientBoosting => 1.0,
    };
    let mut base = model.base_value.clone();
    for t in &model.trees {
        for (b, e) in base.iter_mut().zip(t.expected_value()) {
            *b += scale * e;
        }
    }
    let rows: Vec<Vec<f64>> = (0..x.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut acc = vec![0.0; nf * k];
            let mut phi = vec![0.0; nf * k];
            for t in &model.trees {
                phi.iter_mut().for_each(|v| *v = 0.0);
                tree_shap_into(t, row, &mut phi)?;
                for (a, p) in acc.iter_mut().zip(&phi) {
                    *a += scale * p;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, ShapError>>()?;
    Ok(ShapMatrix {
        n_samples: x.n_rows(),
        n_features: nf,
        n_classes: k,
        values: rows.concat(),
        base_values: base,
        space: ShapSpace::for_kind(model.kind),
        feature_names: model.feature_names.clone(),
        data: x.clone(),
        sample_ids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score, lower index first on ties.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    pub fn from_raw(feature_names: Vec<String>, raw: Vec<f64>) -> Self {
        let total: f64 = raw.iter().sum();
        let scores: Vec<f64> = if total > 0.0 {
            raw.iter().map(|v| v / total).collect()
        } else {
            vec![0.0; raw.len()]
        };
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        GlobalImportance {
            feature_names,
            scores,
            ranking,
        }
    }

    pub fn top(&self, n: usize) -> Vec<&str> {
        self.ranking
            .iter()
            .take(n)
            .map(|&i| self.feature_names[i].as_str())
            .collect()
    }
}

/// Mean absolute attribution per feature, averaged over samples within a
/// fold and then over folds, normalized to sum 1. With `positive = None`
/// the absolute values are first averaged over classes; with
/// `Some(class)` the binary view toward that class is used.
pub fn global_importance(folds: &[ShapMatrix], positive: Option<usize>) -> Result<GlobalImportance, ShapError> {
    let first = folds.first().ok_or(ShapError::EmptyFolds)?;
    let nf = first.n_features;
    let mut raw = vec![0.0; nf];
    for fold in folds {
        if fold.n_features != nf || fold.feature_names != first.feature_names {
            return Err(ShapError::SchemaMismatch {
                expected: nf,
                got: fold.n_features,
            });
        }
        if fold.n_samples == 0 {
            return Err(ShapError::EmptyFolds);
        }
        if positive.is_some() && fold.n_classes != 2 {
            return Err(ShapError::NotBinary(fold.n_classes));
        }
        for (f, r) in raw.iter_mut().enumerate() {
            let mut sum = 0.0;
            for s in 0..fold.n_samples {
                sum += match positive {
                    Some(p) => fold.binary_value(s, f, p).abs(),
                    None => (0..fold.n_classes).map(|k| fold.value(s, f, k).abs()).sum::<f64>() / fold.n_classes as f64,
                };
            }
            *r += sum / fold.n_samples as f64;
        }
    }
    for r in &mut raw {
        *r /= folds.len() as f64;
    }
    Ok(GlobalImportance::from_raw(first.feature_names.clone(), raw))
}

/// `(feature value, attribution toward positive)` pairs pooled over folds.
pub fn class_specific_shap(folds: &[ShapMatrix], feature: &str, positive: usize) -> Result<Vec<(f64, f64)>, ShapError> {
    let mut out = Vec::new();
    for fold in folds {
        if fold.n_classes != 2 || positive > 1 {
            return Err(ShapError::NotBinary(fold.n_classes));
        }
        let f = fold.feature_index(feature)?;
        for s in 0..fold.n_samples {
            out.push((fold.data.get(s, f), fold.binary_value(s, f, positive)));
        }
    }
    Ok(out)
}
