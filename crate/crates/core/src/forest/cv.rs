//! Classification scenarios, stratified k-fold splitting and
//! cross-validated training.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{
    derived_rng, train_gradient_boosting, train_random_forest, BoostingParams, ForestParams, TreeEnsemble,
};
use super::metrics::{evaluate, CvReport, Metrics};
use super::ForestError;
use crate::features::CdoCategory;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ThreeClass,
    LowVsNotLow,
    HighVsNotHigh,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::ThreeClass, Scenario::LowVsNotLow, Scenario::HighVsNotHigh];

    pub fn id(self) -> &'static str {
        match self {
            Scenario::ThreeClass => "three_class",
            Scenario::LowVsNotLow => "low_vs_notlow",
            Scenario::HighVsNotHigh => "high_vs_nothigh",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Scenario::ThreeClass => "Low vs Medium vs High",
            Scenario::LowVsNotLow => "Low vs Not Low",
            Scenario::HighVsNotHigh => "High vs Not High",
        }
    }

    pub fn is_binary(self) -> bool {
        self != Scenario::ThreeClass
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = ForestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.id() == s)
            .ok_or_else(|| ForestError::InvalidParams(format!("unknown scenario `{s}`")))
    }
}

/// A scenario together with its class naming and, for binary scenarios,
/// the class whose precision and recall are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub positive_class: usize,
}

impl ScenarioSpec {
    /// Binary scenarios default to class 1 (Not Low, High) as positive.
    pub fn new(scenario: Scenario) -> Self {
        ScenarioSpec {
            scenario,
            positive_class: 1,
        }
    }

    pub fn with_positive_class(mut self, class: usize) -> Result<Self, ForestError> {
        if class >= self.n_classes() {
            return Err(ForestError::InvalidParams(format!("positive class {class}")));
        }
        self.positive_class = class;
        Ok(self)
    }

    pub fn n_classes(&self) -> usize {
        match self.scenario {
            Scenario::ThreeClass => 3,
            _ => 2,
        }
    }

    pub fn class_names(&self) -> Vec<&'static str> {
        match self.scenario {
            Scenario::ThreeClass => vec!["Low", "Medium", "High"],
            Scenario::LowVsNotLow => vec!["Low", "Not Low"],
            Scenario::HighVsNotHigh => vec!["Not High", "High"],
        }
    }

    pub fn map(&self, c: CdoCategory) -> usize {
        use CdoCategory::*;
        match (self.scenario, c) {
            (Scenario::ThreeClass, Low) => 0,
            (Scenario::ThreeClass, Medium) => 1,
            (Scenario::ThreeClass, High) => 2,
            (Scenario::LowVsNotLow, Low) => 0,
            (Scenario::LowVsNotLow, _) => 1,
            (Scenario::HighVsNotHigh, High) => 1,
            (Scenario::HighVsNotHigh, _) => 0,
        }
    }

    pub fn relabel(&self, labels: &[CdoCategory]) -> Vec<usize> {
        labels.iter().map(|&c| self.map(c)).collect()
    }

    /// Relabels textual categories, rejecting anything outside
    /// `{Low, Medium, High}`.
    pub fn relabel_names<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>, ForestError> {
        labels
            .iter()
            .map(|s| {
                s.as_ref()
                    .parse::<CdoCategory>()
                    .map(|c| self.map(c))
                    .map_err(|_| ForestError::UnknownLabel(s.as_ref().to_string()))
            })
            .collect()
    }
}

/// Splits `0..labels.len()` into `k` test folds. Each class is shuffled
/// with the seeded RNG; the per-class lists are concatenated in class order
/// and dealt round-robin, so fold sizes differ by at most one and each
/// class is spread within one sample of its expected per-fold count.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, ForestError> {
    if k < 2 {
        return Err(ForestError::InvalidParams("k must be >= 2".into()));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = derived_rng(seed, 0);
    let mut sequence = Vec::with_capacity(labels.len());
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(ForestError::ClassTooSmall {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        sequence.extend_from_slice(members);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in sequence.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Training indices complementary to test fold `fold`.
pub fn train_indices(folds: &[Vec<usize>], fold: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != fold)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(ForestParams),
    GradientBoosting(BoostingParams),
}

impl ModelSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::RandomForest(_) => "rf",
            ModelSpec::GradientBoosting(_) => "gb",
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ModelSpec::RandomForest(p) => ModelSpec::RandomForest(ForestParams { seed, ..p }),
            ModelSpec::GradientBoosting(p) => ModelSpec::GradientBoosting(BoostingParams { seed, ..p }),
        }
    }

    pub fn train(
        &self,
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        names: &[String],
    ) -> Result<TreeEnsemble, ForestError> {
        match self {
            ModelSpec::RandomForest(p) => train_random_forest(x, y, n_classes, names, p),
            ModelSpec::GradientBoosting(p) => train_gradient_boosting(x, y, n_classes, names, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub test: Vec<usize>,
    pub model: TreeEnsemble,
    pub predictions: Vec<usize>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub spec: ScenarioSpec,
    pub folds: Vec<FoldResult>,
    pub report: CvReport,
}

/// Seed for the model trained on fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

/// Stratified k-fold cross-validation. Folds are trained in parallel; each
/// fold model gets a seed derived from `(seed, fold)`.
pub fn cross_validate(
    x: &Matrix,
    y: &[usize],
    names: &[String],
    spec: &ScenarioSpec,
    model: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<CvOutcome, ForestError> {
    if x.n_rows() != y.len() {
        return Err(ForestError::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    let folds = stratified_kfold(y, k, seed)?;
    let results: Vec<FoldResult> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train = train_indices(&folds, f);
            let xt = x.select_rows(&train);
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let m = model
                .with_seed(fold_seed(seed, f))
                .train(&xt, &yt, spec.n_classes(), names)?;
            let test = folds[f].clone();
            let predictions = test
                .iter()
                .map(|&i| m.predict(x.row(i)))
                .collect::<Result<Vec<_>, _>>()?;
            let truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
            let metrics = evaluate(&predictions, &truth, spec)?;
            Ok(FoldResult {
                test,
                model: m,
                predictions,
                metrics,
            })
        })
        .collect::<Result<_, ForestError>>()?;
    let report = CvReport::from_folds(results.iter().map(|r| r.metrics).collect());
    Ok(CvOutcome {
        spec: *spec,
        folds: results,
        report,
    })
}
