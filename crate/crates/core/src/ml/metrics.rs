use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;

/// Confusion counts and the derived rates, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

pub fn evaluate(predicted: &[Label], truth: &[Label]) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::input(format!("{} predictions for {} labels", predicted.len(), truth.len())));
    }
    if truth.is_empty() {
        return Err(Error::input("cannot evaluate an empty prediction set"));
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0, 0, 0, 0);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (t, p) {
            (Label::Case, Label::Case) => tp += 1,
            (Label::Case, Label::Control) => fn_ += 1,
            (Label::Control, Label::Control) => tn += 1,
            (Label::Control, Label::Case) => fp += 1,
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(Error::input("evaluation needs both case and control samples in the truth labels"));
    }
    Ok(Metrics {
        true_positives: tp,
        false_negatives: fn_,
        true_negatives: tn,
        false_positives: fp,
        sensitivity: 100.0 * tp as f64 / (tp + fn_) as f64,
        specificity: 100.0 * tn as f64 / (tn + fp) as f64,
        accuracy: 100.0 * (tp + tn) as f64 / truth.len() as f64,
    })
}
