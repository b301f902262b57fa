use super::{check_training_set, ClassifierKind, ClassifierModel, ModelParams, Standardizer};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Label};

/// Stores the standardized training set for Euclidean nearest-neighbour voting.
pub fn fit_knn(train: &FeatureMatrix, k: usize) -> Result<ClassifierModel> {
    check_training_set(train)?;
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::param(format!("k must be a positive odd integer, got {k}")));
    }
    if k > train.n_samples() {
        return Err(Error::param(format!("k = {k} exceeds the {} training samples", train.n_samples())));
    }
    let standardizer = Standardizer::fit(train);
    let points = train.rows().iter().map(|r| standardizer.transform(r)).collect();
    Ok(ClassifierModel {
        kind: ClassifierKind::Knn,
        standardizer,
        params: ModelParams::Neighbours { points, labels: train.labels().to_vec(), k },
        iterations: 0,
        objective_trace: Vec::new(),
    })
}

/// Majority label among the `k` nearest training rows.
pub fn knn_predict(train: &FeatureMatrix, query: &[f64], k: usize) -> Result<Label> {
    if query.len() != train.n_features() {
        return Err(Error::input(format!(
            "query has {} features, training set has {}",
            query.len(),
            train.n_features()
        )));
    }
    Ok(fit_knn(train, k)?.predict(query))
}

/// Indices of the `k` nearest points; equal distances go to the lower index.
pub(crate) fn nearest(points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    let mut dist: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(query).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist.into_iter().take(k).map(|(_, i)| i).collect()
}
