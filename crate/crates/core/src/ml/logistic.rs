use nalgebra::{DMatrix, DVector};

use super::{check_training_set, ClassifierKind, ClassifierModel, ModelParams, Standardizer};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Ridge penalty on the (standardized) weights; the intercept is not penalized.
pub const LOGISTIC_RIDGE: f64 = 1e-6;
/// Convergence threshold on the Euclidean norm of the objective gradient.
pub const LOGISTIC_TOLERANCE: f64 = 1e-8;
pub const LOGISTIC_MAX_ITERATIONS: usize = 500;

pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

struct Problem {
    /// Standardized design with a leading column of ones.
    design: DMatrix<f64>,
    /// 1 for case, 0 for control.
    target: DVector<f64>,
}

impl Problem {
    fn objective(&self, beta: &DVector<f64>) -> f64 {
        let n = self.design.nrows() as f64;
        let linear = &self.design * beta;
        let nll: f64 = linear.iter().zip(self.target.iter()).map(|(&s, &y)| softplus(s) - y * s).sum();
        let ridge: f64 = beta.iter().skip(1).map(|b| b * b).sum();
        nll / n + 0.5 * LOGISTIC_RIDGE * ridge
    }
}

/// Penalized maximum-likelihood logistic regression by Newton–Raphson (IRLS)
/// with backtracking.
pub fn fit_logistic(train: &FeatureMatrix) -> Result<ClassifierModel> {
    check_training_set(train)?;
    let standardizer = Standardizer::fit(train);
    let n = train.n_samples();
    let dim = train.n_features() + 1;
    let design = DMatrix::from_fn(n, dim, |i, j| {
        if j == 0 {
            1.0
        } else {
            (train.row(i)[j - 1] - standardizer.mean[j - 1]) / standardizer.scale[j - 1]
        }
    });
    let target = DVector::from_iterator(n, train.labels().iter().map(|l| if l.is_case() { 1.0 } else { 0.0 }));
    let problem = Problem { design, target };

    let nf = n as f64;
    let mut penalty = DMatrix::identity(dim, dim) * LOGISTIC_RIDGE;
    penalty[(0, 0)] = 0.0;

    let mut beta = DVector::zeros(dim);
    let mut current = problem.objective(&beta);
    let mut trace = vec![current];
    for iteration in 0..LOGISTIC_MAX_ITERATIONS {
        let prob = (&problem.design * &beta).map(sigmoid);
        let mut gradient = problem.design.tr_mul(&(&prob - &problem.target)) / nf;
        for j in 1..dim {
            gradient[j] += LOGISTIC_RIDGE * beta[j];
        }
        if gradient.norm() < LOGISTIC_TOLERANCE {
            return Ok(finish(standardizer, &beta, iteration, trace));
        }

        let weights = prob.map(|p| (p * (1.0 - p)).max(1e-12));
        let weighted = DMatrix::from_fn(n, dim, |i, j| problem.design[(i, j)] * weights[i]);
        let hessian = problem.design.tr_mul(&weighted) / nf + &penalty;
        let step = match hessian.clone().cholesky() {
            Some(chol) => chol.solve(&gradient),
            None => hessian.lu().solve(&gradient).ok_or(Error::Convergence { iterations: iteration })?,
        };

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let candidate = &beta - &step * t;
            let value = problem.objective(&candidate);
            if value <= current {
                beta = candidate;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(current);
        if !accepted {
            // no representable decrease left along the Newton direction
            if gradient.norm() < LOGISTIC_TOLERANCE.sqrt() {
                return Ok(finish(standardizer, &beta, iteration + 1, trace));
            }
            return Err(Error::Convergence { iterations: iteration + 1 });
        }
    }
    Err(Error::Convergence { iterations: LOGISTIC_MAX_ITERATIONS })
}

fn finish(standardizer: Standardizer, beta: &DVector<f64>, iterations: usize, objective_trace: Vec<f64>) -> ClassifierModel {
    ClassifierModel {
        kind: ClassifierKind::LogisticRegression,
        standardizer,
        params: ModelParams::Linear { weights: beta.iter().skip(1).copied().collect(), bias: beta[0] },
        iterations,
        objective_trace,
    }
}
