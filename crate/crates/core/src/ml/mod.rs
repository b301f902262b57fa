//! Classification harness: splitting, three classifiers, ROC thresholding and
//! the repeated hold-out experiment.

mod experiment;
mod knn;
mod logistic;
mod metrics;
mod roc;
mod split;
mod svm;

pub use experiment::{
    modal_features, repeat_experiment, ExperimentConfig, EvaluationReport, RepetitionRecord, SelectionGroup,
    SelectionScope,
};
pub use knn::{fit_knn, knn_predict};
pub use logistic::{fit_logistic, LOGISTIC_MAX_ITERATIONS, LOGISTIC_RIDGE, LOGISTIC_TOLERANCE};
pub use metrics::{evaluate, Metrics};
pub use roc::{roc_and_youden, youden_argmax, RocCurve, RocPoint};
pub use split::{split_and_balance, Split, SplitConfig};
pub use svm::{fit_linear_svm, SVM_MAX_ITERATIONS, SVM_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticRegression,
    LinearSvm,
    Knn,
}

/// Classifier choice plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// L2 penalty of the linear SVM.
    pub svm_regularization: f64,
    /// Neighbour count for KNN; must be odd.
    pub knn_k: usize,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self { kind: ClassifierKind::LogisticRegression, svm_regularization: 0.01, knn_k: 5 }
    }
}

impl ClassifierSpec {
    pub fn fit(&self, train: &FeatureMatrix) -> Result<ClassifierModel> {
        match self.kind {
            ClassifierKind::LogisticRegression => fit_logistic(train),
            ClassifierKind::LinearSvm => fit_linear_svm(train, self.svm_regularization),
            ClassifierKind::Knn => fit_knn(train, self.knn_k),
        }
    }
}

/// Per-feature centring and scaling learned from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        let n = matrix.n_samples() as f64;
        let p = matrix.n_features();
        let mut mean = vec![0.0; p];
        for row in matrix.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; p];
        for row in matrix.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let denom = (n - 1.0).max(1.0);
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / denom).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Linear { weights: Vec<f64>, bias: f64 },
    Neighbours { points: Vec<Vec<f64>>, labels: Vec<Label>, k: usize },
}

/// A fitted classifier. Inputs are raw feature rows; standardization is applied internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: ClassifierKind,
    pub standardizer: Standardizer,
    pub params: ModelParams,
    /// Solver iterations used (0 for KNN).
    pub iterations: usize,
    /// Objective value after each accepted solver step.
    pub objective_trace: Vec<f64>,
}

impl ClassifierModel {
    /// Continuous score, larger meaning more case-like: the case probability for
    /// logistic regression, the signed margin for the SVM, and the fraction of
    /// case neighbours for KNN.
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform(row);
        match &self.params {
            ModelParams::Linear { weights, bias } => {
                let s = bias + weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>();
                match self.kind {
                    ClassifierKind::LogisticRegression => logistic::sigmoid(s),
                    _ => s,
                }
            }
            ModelParams::Neighbours { points, labels, k } => {
                let nearest = knn::nearest(points, &z, *k);
                nearest.iter().filter(|&&i| labels[i].is_case()).count() as f64 / *k as f64
            }
        }
    }

    /// Default decision rule: probability 0.5, margin 0, or majority vote.
    pub fn default_threshold(&self) -> f64 {
        match self.kind {
            ClassifierKind::LogisticRegression => 0.5,
            ClassifierKind::LinearSvm => 0.0,
            ClassifierKind::Knn => 0.5,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Label {
        self.predict_with_threshold(row, self.default_threshold())
    }

    pub fn predict_with_threshold(&self, row: &[f64], threshold: f64) -> Label {
        let s = self.score(row);
        let positive = match self.kind {
            // an odd k never produces a tie at exactly one half
            ClassifierKind::Knn => s > threshold,
            _ => s >= threshold,
        };
        if positive {
            Label::Case
        } else {
            Label::Control
        }
    }

    pub fn scores(&self, matrix: &FeatureMatrix) -> Vec<f64> {
        matrix.rows().iter().map(|r| self.score(r)).collect()
    }
}

pub(crate) fn check_training_set(train: &FeatureMatrix) -> Result<()> {
    if train.n_features() == 0 {
        return Err(Error::input("training matrix has no features"));
    }
    for label in [Label::Case, Label::Control] {
        if train.count(label) < 2 {
            return Err(Error::input(format!("training set needs at least 2 {label} samples")));
        }
    }
    Ok(())
}

/// `+1` for case, `-1` for control.
pub(crate) fn signed(label: Label) -> f64 {
    if label.is_case() {
        1.0
    } else {
        -1.0
    }
}
