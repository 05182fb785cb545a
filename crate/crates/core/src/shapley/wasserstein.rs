use serde::{Deserialize, Serialize};

use super::ShapError;
use crate::matrix::Matrix;

/// Exact 1-Wasserstein distance between two empirical distributions,
/// computed as the integral of |F_a - F_b| over the merged support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, ShapError> {
    if a.is_empty() || b.is_empty() {
        return Err(ShapError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(ShapError::NonFiniteValue);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
    all.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    for w in all.windows(2) {
        let x = w[0];
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let dx = w[1] - x;
        if dx > 0.0 {
            total += (i as f64 / na - j as f64 / nb).abs() * dx;
        }
    }
    Ok(total)
}

/// Separability of class-conditional attribution distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdReport {
    pub feature_names: Vec<String>,
    pub per_feature: Vec<f64>,
    pub mean: f64,
    pub top5_mean: f64,
    pub count_above_half: usize,
}

impl WdReport {
    pub fn from_distances(feature_names: Vec<String>, per_feature: Vec<f64>) -> Self {
        let n = per_feature.len().max(1) as f64;
        let mean = per_feature.iter().sum::<f64>() / n;
        let mut sorted = per_feature.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let top = &sorted[..sorted.len().min(5)];
        let top5_mean = if top.is_empty() {
            0.0
        } else {
            top.iter().sum::<f64>() / top.len() as f64
        };
        let count_above_half = per_feature.iter().filter(|&&w| w > 0.5).count();
        WdReport {
            feature_names,
            per_feature,
            mean,
            top5_mean,
            count_above_half,
        }
    }
}

/// Per-feature distance between the attributions of class-0 and class-1
/// samples. `values` is samples x features in the binary view.
pub fn wd_report(values: &Matrix, labels: &[usize], feature_names: &[String]) -> Result<WdReport, ShapError> {
    if values.n_rows() != labels.len() {
        return Err(ShapError::SchemaMismatch {
            expected: values.n_rows(),
            got: labels.len(),
        });
    }
    if values.n_cols() != feature_names.len() {
        return Err(ShapError::SchemaMismatch {
            expected: feature_names.len(),
            got: values.n_cols(),
        });
    }
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    if neg.is_empty() || pos.is_empty() {
        return Err(ShapError::SingleClassData);
    }
    let per_feature = (0..values.n_cols())
        .map(|f| {
            let a: Vec<f64> = neg.iter().map(|&i| values.get(i, f)).collect();
            let b: Vec<f64> = pos.iter().map(|&i| values.get(i, f)).collect();
            wasserstein_1d(&a, &b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WdReport::from_distances(feature_names.to_vec(), per_feature))
}
