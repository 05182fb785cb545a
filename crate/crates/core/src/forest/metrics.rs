use serde::{Deserialize, Serialize};

use super::cv::ScenarioSpec;
use super::ForestError;

/// Accuracy, precision, recall and F1. For binary scenarios precision and
/// recall refer to the positive class; for three classes all three are
/// macro-averaged, with macro F1 the unweighted mean of per-class F1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Row = truth, column = prediction.
pub fn confusion_matrix(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>, ForestError> {
    if pred.len() != truth.len() {
        return Err(ForestError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let mut cm = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= n_classes || t >= n_classes {
            return Err(ForestError::UnknownLabel(format!("class {}", p.max(t))));
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// Per-class (precision, recall, f1).
pub fn per_class(cm: &[Vec<usize>]) -> Vec<(f64, f64, f64)> {
    let k = cm.len();
    (0..k)
        .map(|c| {
            let tp = cm[c][c];
            let predicted: usize = (0..k).map(|t| cm[t][c]).sum();
            let actual: usize = cm[c].iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            (p, r, f1(p, r))
        })
        .collect()
}

pub fn evaluate(pred: &[usize], truth: &[usize], spec: &ScenarioSpec) -> Result<Metrics, ForestError> {
    if pred.is_empty() {
        return Err(ForestError::EmptyInput);
    }
    let cm = confusion_matrix(pred, truth, spec.n_classes())?;
    let correct: usize = (0..cm.len()).map(|c| cm[c][c]).sum();
    let accuracy = ratio(correct, pred.len());
    let pc = per_class(&cm);
    let m = if spec.scenario.is_binary() {
        let (precision, recall, f1) = pc[spec.positive_class];
        Metrics {
            accuracy,
            precision,
            recall,
            f1,
        }
    } else {
        let k = pc.len() as f64;
        Metrics {
            accuracy,
            precision: pc.iter().map(|c| c.0).sum::<f64>() / k,
            recall: pc.iter().map(|c| c.1).sum::<f64>() / k,
            f1: pc.iter().map(|c| c.2).sum::<f64>() / k,
        }
    };
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<Metrics>,
    pub mean: Metrics,
}

impl CvReport {
    pub fn from_folds(folds: Vec<Metrics>) -> Self {
        let n = folds.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
        let mean = Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        };
        CvReport { folds, mean }
    }
}
