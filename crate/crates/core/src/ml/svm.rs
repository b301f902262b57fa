use super::{check_training_set, signed, ClassifierKind, ClassifierModel, ModelParams, Standardizer};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Stop once the relative objective decrease stays below this for several steps.
pub const SVM_TOLERANCE: f64 = 1e-6;
pub const SVM_MAX_ITERATIONS: usize = 20_000;
const STALL_STEPS: usize = 5;

struct Hinge<'a> {
    rows: &'a [Vec<f64>],
    targets: &'a [f64],
    lambda: f64,
}

impl Hinge<'_> {
    fn objective(&self, w: &[f64], b: f64) -> f64 {
        let loss: f64 = self
            .rows
            .iter()
            .zip(self.targets)
            .map(|(z, &y)| (1.0 - y * (b + dot(w, z))).max(0.0))
            .sum();
        0.5 * self.lambda * dot(w, w) + loss / self.rows.len() as f64
    }

    fn subgradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let n = self.rows.len() as f64;
        let mut gw: Vec<f64> = w.iter().map(|v| self.lambda * v).collect();
        let mut gb = 0.0;
        for (z, &y) in self.rows.iter().zip(self.targets) {
            if y * (b + dot(w, z)) < 1.0 {
                for (g, x) in gw.iter_mut().zip(z) {
                    *g -= y * x / n;
                }
                gb -= y / n;
            }
        }
        (gw, gb)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear SVM minimizing `λ/2 |w|² + mean hinge loss` by full-batch subgradient
/// descent with a backtracking line search that only accepts decreasing steps.
pub fn fit_linear_svm(train: &FeatureMatrix, regularization: f64) -> Result<ClassifierModel> {
    check_training_set(train)?;
    if !(regularization > 0.0 && regularization.is_finite()) {
        return Err(Error::param(format!("SVM regularization must be positive, got {regularization}")));
    }
    let standardizer = Standardizer::fit(train);
    let rows: Vec<Vec<f64>> = train.rows().iter().map(|r| standardizer.transform(r)).collect();
    let targets: Vec<f64> = train.labels().iter().map(|&l| signed(l)).collect();
    let problem = Hinge { rows: &rows, targets: &targets, lambda: regularization };

    let mut w = vec![0.0; train.n_features()];
    let mut b = 0.0;
    let mut current = problem.objective(&w, b);
    let mut trace = vec![current];
    let mut step: f64 = 1.0;
    let mut stalled = 0;

    for iteration in 0..SVM_MAX_ITERATIONS {
        let (gw, gb) = problem.subgradient(&w, b);
        let norm2 = dot(&gw, &gw) + gb * gb;
        if norm2.sqrt() < SVM_TOLERANCE {
            return Ok(finish(standardizer, w, b, iteration, trace));
        }
        let mut t = (2.0 * step).min(1e3);
        let mut accepted = None;
        while t > 1e-12 {
            let cw: Vec<f64> = w.iter().zip(&gw).map(|(v, g)| v - t * g).collect();
            let cb = b - t * gb;
            let value = problem.objective(&cw, cb);
            if value < current {
                accepted = Some((cw, cb, value));
                break;
            }
            t *= 0.5;
        }
        let Some((cw, cb, value)) = accepted else {
            // the subgradient is no longer a descent direction: we sit on a kink at the optimum
            return Ok(finish(standardizer, w, b, iteration, trace));
        };
        let relative = (current - value) / current.abs().max(f64::MIN_POSITIVE);
        w = cw;
        b = cb;
        current = value;
        step = t;
        trace.push(current);
        stalled = if relative < SVM_TOLERANCE { stalled + 1 } else { 0 };
        if stalled >= STALL_STEPS {
            return Ok(finish(standardizer, w, b, iteration + 1, trace));
        }
    }
    Err(Error::Convergence { iterations: SVM_MAX_ITERATIONS })
}

fn finish(standardizer: Standardizer, weights: Vec<f64>, bias: f64, iterations: usize, trace: Vec<f64>) -> ClassifierModel {
    ClassifierModel {
        kind: ClassifierKind::LinearSvm,
        standardizer,
        params: ModelParams::Linear { weights, bias },
        iterations,
        objective_trace: trace,
    }
}
