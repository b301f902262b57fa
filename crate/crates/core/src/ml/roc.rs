use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
    /// Scores at or above this value are called case. Infinite for the (0, 0) corner.
    #[serde(skip)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From (0, 0) to (1, 1), one point per distinct score.
    pub points: Vec<RocPoint>,
    /// Midpoint of the score interval achieving the best Youden index.
    pub best_threshold: f64,
    /// `sensitivity + specificity - 1` at the best threshold.
    pub youden: f64,
    /// The same index scaled by `1/√2`, the distance of the ROC point from the diagonal.
    pub youden_distance: f64,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                (w[1].false_positive_rate - w[0].false_positive_rate)
                    * (w[1].true_positive_rate + w[0].true_positive_rate)
                    / 2.0
            })
            .sum()
    }
}

/// ROC over every distinct score plus the Youden-optimal threshold.
pub fn roc_and_youden(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::input(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::input("ROC scores must be finite"));
    }
    let positives = labels.iter().filter(|l| l.is_case()).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::input("ROC needs both case and control samples"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { false_positive_rate: 0.0, true_positive_rate: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]].is_case() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            false_positive_rate: fp as f64 / negatives as f64,
            true_positive_rate: tp as f64 / positives as f64,
            threshold: t,
        });
    }

    let best = youden_argmax(&points, 1.0);
    let youden = points[best].true_positive_rate - points[best].false_positive_rate;
    Ok(RocCurve {
        best_threshold: cut_midpoint(&points, best),
        youden,
        youden_distance: youden / std::f64::consts::SQRT_2,
        points,
    })
}

/// Index of the first point maximizing `weight * (TPR - FPR)`; any positive weight
/// picks the same point.
pub fn youden_argmax(points: &[RocPoint], weight: f64) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let value = weight * (p.true_positive_rate - p.false_positive_rate);
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    best
}

/// A threshold strictly inside the score interval that realizes the cut at `idx`.
fn cut_midpoint(points: &[RocPoint], idx: usize) -> f64 {
    let upper = points[idx].threshold;
    match points.get(idx + 1) {
        Some(next) if upper.is_finite() => 0.5 * (upper + next.threshold),
        Some(next) => next.threshold + next.threshold.abs().max(1.0),
        None => upper,
    }
}
