//! Level-wise energy estimators for detail coefficients.
//!
//! The distance variance of a vector `x` is
//! `V² = (1/n²) ΣΣ A_ij²`, where `A` is the double-centered matrix of
//! pairwise distances `a_ij = |x_i - x_j|`. Expanding the square gives
//!
//! `V² = S1 + S2 - 2 S3`, with
//! `S1 = (1/n²) ΣΣ a_ij²`, `S2 = (mean of a)²`, `S3 = (1/n) Σ_i (row mean i)²`.
//!
//! For a single vector `S1` reduces to `(2/n) Σ (x_i - x̄)²`, and every row
//! sum of `a` follows from prefix sums over the sorted values, so the fast
//! path costs one sort plus a linear sweep. It is exact: the only difference
//! from the naive path is floating-point rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    MeanSquare,
    DistanceVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnergyEstimator {
    pub kind: EstimatorKind,
    /// Only consulted for [`EstimatorKind::DistanceVariance`].
    pub algorithm: Algorithm,
}

impl EnergyEstimator {
    pub const MEAN_SQUARE: Self = Self { kind: EstimatorKind::MeanSquare, algorithm: Algorithm::Fast };
    pub const DISTANCE_VARIANCE: Self = Self { kind: EstimatorKind::DistanceVariance, algorithm: Algorithm::Fast };
    pub const DISTANCE_VARIANCE_NAIVE: Self =
        Self { kind: EstimatorKind::DistanceVariance, algorithm: Algorithm::Naive };

    /// Smallest number of coefficients the estimator accepts.
    pub fn min_len(&self) -> usize {
        match self.kind {
            EstimatorKind::MeanSquare => 1,
            EstimatorKind::DistanceVariance => 2,
        }
    }

    pub fn estimate(&self, coeffs: &[f64]) -> Result<f64> {
        match (self.kind, self.algorithm) {
            (EstimatorKind::MeanSquare, _) => mean_square_energy(coeffs),
            (EstimatorKind::DistanceVariance, Algorithm::Naive) => distance_variance_naive(coeffs),
            (EstimatorKind::DistanceVariance, Algorithm::Fast) => distance_variance_fast(coeffs),
        }
    }

    /// Short tag used in CSV output and on the command line.
    pub fn tag(&self) -> &'static str {
        match self.kind {
            EstimatorKind::MeanSquare => "var",
            EstimatorKind::DistanceVariance => "dvar",
        }
    }
}

impl Default for EnergyEstimator {
    fn default() -> Self {
        Self::DISTANCE_VARIANCE
    }
}

/// Uncentered mean of squares, `(1/n) Σ x²`.
pub fn mean_square_energy(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::input("mean-square energy of an empty vector"));
    }
    Ok(coeffs.iter().map(|v| v * v).sum::<f64>() / coeffs.len() as f64)
}

/// Distance variance by explicit double centering. O(n²) time, O(n) memory.
pub fn distance_variance_naive(coeffs: &[f64]) -> Result<f64> {
    let n = coeffs.len();
    if n < 2 {
        return Err(Error::input(format!("distance variance needs at least 2 values, got {n}")));
    }
    let nf = n as f64;
    let row_means: Vec<f64> = coeffs
        .par_iter()
        .map(|&xi| coeffs.iter().map(|&xj| (xi - xj).abs()).sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = coeffs[i];
            let mi = row_means[i];
            coeffs
                .iter()
                .zip(&row_means)
                .map(|(&xj, &mj)| {
                    let a = (xi - xj).abs() - mi - mj + grand;
                    a * a
                })
                .sum::<f64>()
        })
        .collect();
    Ok((row_sums.iter().sum::<f64>() / (nf * nf)).max(0.0))
}

/// Distance variance via sorting and prefix sums. O(n log n) time.
pub fn distance_variance_fast(coeffs: &[f64]) -> Result<f64> {
    let n = coeffs.len();
    if n < 2 {
        return Err(Error::input(format!("distance variance needs at least 2 values, got {n}")));
    }
    let nf = n as f64;
    let mean = coeffs.iter().sum::<f64>() / nf;
    // centring leaves every |x_i - x_j| unchanged and keeps the sums well scaled
    let mut sorted: Vec<f64> = coeffs.iter().map(|v| v - mean).collect();
    sorted.sort_by(f64::total_cmp);

    let total: f64 = sorted.iter().sum();
    let sum_sq: f64 = sorted.iter().map(|v| v * v).sum();
    // Σ (x - x̄)² with the residual mean of the centred data removed
    let centred_ss = sum_sq - total * total / nf;

    let mut prefix = 0.0;
    let mut row_total = 0.0;
    let mut row_sq_total = 0.0;
    for (rank, &y) in sorted.iter().enumerate() {
        let below = rank as f64;
        let above = (n - 1 - rank) as f64;
        let row = below * y - prefix + (total - prefix - y) - above * y;
        let row_mean = row / nf;
        row_total += row_mean;
        row_sq_total += row_mean * row_mean;
        prefix += y;
    }
    let grand = row_total / nf;
    let s1 = 2.0 * centred_ss / nf;
    let s3 = row_sq_total / nf;
    Ok((s1 + grand * grand - 2.0 * s3).max(0.0))
}
