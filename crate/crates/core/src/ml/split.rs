use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of each class assigned to training.
    pub train_fraction: f64,
    /// Subsample the majority class down to the minority size before splitting.
    pub balance: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.67, balance: true, seed: 0 }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::param(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Row indices into the source matrix, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Seeded balancing followed by a per-class (stratified) train/test split.
pub fn split_and_balance(matrix: &FeatureMatrix, config: &SplitConfig) -> Result<Split> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rows_of = |label| -> Vec<usize> { (0..matrix.n_samples()).filter(|&i| matrix.labels()[i] == label).collect() };
    let mut cases = rows_of(Label::Case);
    let mut controls = rows_of(Label::Control);
    for (label, rows) in [(Label::Case, &cases), (Label::Control, &controls)] {
        if rows.len() < 2 {
            return Err(Error::input(format!("need at least 2 {label} samples to split, found {}", rows.len())));
        }
    }

    if config.balance {
        let target = cases.len().min(controls.len());
        for rows in [&mut cases, &mut controls] {
            if rows.len() > target {
                let mut keep: Vec<usize> = index::sample(&mut rng, rows.len(), target).into_iter().map(|k| rows[k]).collect();
                keep.sort_unstable();
                *rows = keep;
            }
        }
    }

    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for rows in [&mut cases, &mut controls] {
        rows.shuffle(&mut rng);
        let n = rows.len();
        let n_train = ((config.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(Split {
        train: matrix.select_rows(&train_rows),
        test: matrix.select_rows(&test_rows),
        train_rows,
        test_rows,
    })
}
