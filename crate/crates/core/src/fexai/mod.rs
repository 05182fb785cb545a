//! Winner-take-all fuzzy rule classifier over MDRate, FltSegments and
//! MDirection for the Low vs Not Low task.

pub mod membership;
pub mod rules;

use thiserror::Error;

use crate::features::{CdoCategory, Dataset};
use crate::forest::cv::{stratified_kfold, train_indices, Scenario, ScenarioSpec};
use crate::forest::metrics::{evaluate, CvReport, Metrics};
use crate::forest::ForestError;

pub use membership::{membership_degrees, winner_take_all, FuzzyFeature, FuzzySystem, MembershipFunction};
pub use rules::{
    defuzzify, extract_rules, infer, predict, reference_rule_base, union_rule_bases, Antecedent, Consequent, FuzzyRule,
    RuleBase, REFERENCE_RULES,
};

#[derive(Debug, Error)]
pub enum FexaiError {
    #[error("non-finite {0} value")]
    NonFiniteValue(&'static str),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("no training rows")]
    EmptyTraining,
    #[error("rule base is empty")]
    EmptyRuleBase,
    #[error("activation {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("duplicate antecedent `{0}`")]
    DuplicateAntecedent(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Pulls (MDRate, FltSegments, MDirection) out of every dataset row.
pub fn rule_inputs(ds: &Dataset) -> Result<Vec<[f64; 3]>, FexaiError> {
    let idx = FuzzyFeature::ALL.map(|f| ds.feature_index(f.name()));
    let mut cols = [0usize; 3];
    for (i, f) in FuzzyFeature::ALL.into_iter().enumerate() {
        cols[i] = idx[i].ok_or_else(|| FexaiError::UnknownFeature(f.name().to_string()))?;
    }
    Ok((0..ds.len()).map(|r| cols.map(|c| ds.matrix.get(r, c))).collect())
}

pub fn binary_labels(labels: &[CdoCategory]) -> Vec<Consequent> {
    labels
        .iter()
        .map(|&c| {
            if c == CdoCategory::Low {
                Consequent::Low
            } else {
                Consequent::NotLow
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FexaiFold {
    pub test: Vec<usize>,
    pub rules: RuleBase,
    pub predictions: Vec<Consequent>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct FexaiOutcome {
    pub folds: Vec<FexaiFold>,
    pub report: CvReport,
    pub union: RuleBase,
}

/// Stratified k-fold evaluation: each fold extracts rules from its training
/// split and classifies its test split. Metrics use Not Low as the positive
/// class.
pub fn evaluate_fexai(
    rows: &[[f64; 3]],
    labels: &[Consequent],
    system: &FuzzySystem,
    k: usize,
    seed: u64,
) -> Result<FexaiOutcome, FexaiError> {
    if rows.len() != labels.len() {
        return Err(FexaiError::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let y: Vec<usize> = labels.iter().map(|c| c.class()).collect();
    let spec = ScenarioSpec::new(Scenario::LowVsNotLow);
    let folds = stratified_kfold(&y, k, seed)?;
    let mut out = Vec::with_capacity(k);
    for f in 0..k {
        let train = train_indices(&folds, f);
        let tr_rows: Vec<[f64; 3]> = train.iter().map(|&i| rows[i]).collect();
        let tr_labels: Vec<Consequent> = train.iter().map(|&i| labels[i]).collect();
        let rb = extract_rules(&tr_rows, &tr_labels, system)?;
        let test = folds[f].clone();
        let predictions = test
            .iter()
            .map(|&i| predict(&rb, system, &rows[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let pred: Vec<usize> = predictions.iter().map(|c| c.class()).collect();
        let truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
        let metrics = evaluate(&pred, &truth, &spec)?;
        out.push(FexaiFold {
            test,
            rules: rb,
            predictions,
            metrics,
        });
    }
    let union = union_rule_bases(&out.iter().map(|f| f.rules.clone()).collect::<Vec<_>>())?;
    let report = CvReport::from_folds(out.iter().map(|f| f.metrics).collect());
    Ok(FexaiOutcome {
        folds: out,
        report,
        union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realizable_concept_is_learned_exactly() {
        let sys = FuzzySystem::default();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let mdr = 0.005 + 0.0003 * i as f64;
            let fs = 50.0 + 7.0 * ((i * 37) % 150) as f64;
            let md = 0.5 + 0.02 * ((i * 11) % 120) as f64;
            rows.push([mdr, fs, md]);
            labels.push(if mdr >= 0.026 {
                Consequent::NotLow
            } else {
                Consequent::Low
            });
        }
        let out = evaluate_fexai(&rows, &labels, &sys, 5, 3).unwrap();
        assert_eq!(out.report.mean.accuracy, 1.0);
        for r in out.union.rules() {
            let expect = if r.antecedent.0[0] == 0 {
                Consequent::Low
            } else {
                Consequent::NotLow
            };
            assert_eq!(r.consequent, expect);
        }
    }
}
