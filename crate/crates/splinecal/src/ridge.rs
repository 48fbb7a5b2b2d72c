//! L2-regularized logistic regression with cross-validated selection of the
//! regularization strength.
//!
//! The objective is
//! `-sum_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)] + (lambda / 2) * ||beta||^2`
//! with `p_i = sigmoid(intercept + beta . x_i)`. The intercept is not
//! penalized: shrinking the constant term would pull predictions toward 0.5
//! with no smoothing justification. For `lambda > 0` the objective is
//! strictly convex in `beta`, so the minimizer is unique.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::folds::{check_training_splits_cover_classes, stratified_folds};
use crate::linalg::{cholesky_solve, DesignMatrix};
use crate::metrics::PROB_CLAMP;

const MAX_NEWTON_ITERS: usize = 100;
const MAX_HALVINGS: usize = 60;
/// Converged when the gradient max-norm is below this times `max(1, loss)`.
const GRAD_TOL: f64 = 1e-8;

/// A fitted penalized logistic model: unpenalized intercept plus one
/// coefficient per design column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeLogisticModel {
    intercept: f64,
    coefficients: Vec<f64>,
    lambda: f64,
}

impl RidgeLogisticModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[cfg(test)]
    pub(crate) fn from_parts(intercept: f64, coefficients: Vec<f64>, lambda: f64) -> Self {
        Self {
            intercept,
            coefficients,
            lambda,
        }
    }

    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let z = self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(c, x)| c * x)
                .sum::<f64>();
        sigmoid(z)
    }

    pub fn predict(&self, design: &DesignMatrix) -> Vec<f64> {
        (0..design.rows())
            .map(|i| self.predict_one(design.row(i)))
            .collect()
    }
}

/// Grid search record: mean held-out log-loss per lambda and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearchReport {
    pub grid: Vec<f64>,
    pub cv_losses: Vec<f64>,
    pub chosen: f64,
    pub fold_count: usize,
    pub seed: u64,
}

/// Numerically stable sigmoid.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Mean binary log-loss with probabilities clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`, matching the evaluation metric.
pub(crate) fn mean_binary_log_loss(probs: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / probs.len() as f64
}

/// The default grid: 25 points, log-spaced from 1e-4 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    log_spaced_grid(1e-4, 1e4, 25)
}

/// `count` points log-spaced from `min` to `max` inclusive.
pub fn log_spaced_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    assert!(min > 0.0 && max >= min && count >= 1);
    if count == 1 {
        return vec![min];
    }
    let (lo, hi) = (min.log10(), max.log10());
    (0..count)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
        .collect()
}

struct Objective<'a> {
    design: &'a DesignMatrix,
    labels: &'a [u8],
    lambda: f64,
}

impl Objective<'_> {
    fn d(&self) -> usize {
        self.design.cols()
    }

    fn linear_predictor(&self, theta: &[f64], out: &mut [f64]) {
        for i in 0..self.design.rows() {
            let row = self.design.row(i);
            let mut z = theta[0];
            for (c, x) in theta[1..].iter().zip(row) {
                z += c * x;
            }
            out[i] = z;
        }
    }

    /// Penalized objective (sum form, clamped inside the logs).
    fn loss(&self, theta: &[f64], z_buf: &mut [f64]) -> f64 {
        self.linear_predictor(theta, z_buf);
        let mut loss = 0.0;
        for (&z, &y) in z_buf.iter().zip(self.labels) {
            let p = sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        let penalty: f64 = theta[1..].iter().map(|b| b * b).sum();
        loss + 0.5 * self.lambda * penalty
    }

    /// Analytic gradient; `probs` receives the fitted probabilities.
    fn gradient(&self, theta: &[f64], z_buf: &mut [f64], probs: &mut [f64]) -> Vec<f64> {
        self.linear_predictor(theta, z_buf);
        let d = self.d();
        let mut grad = vec![0.0; d + 1];
        for i in 0..self.design.rows() {
            let p = sigmoid(z_buf[i]);
            probs[i] = p;
            let r = p - f64::from(self.labels[i]);
            grad[0] += r;
            for (g, x) in grad[1..].iter_mut().zip(self.design.row(i)) {
                *g += r * x;
            }
        }
        for (g, b) in grad[1..].iter_mut().zip(&theta[1..]) {
            *g += self.lambda * b;
        }
        grad
    }

    /// Full Newton Hessian over `[intercept, beta]`, row-major.
    fn hessian(&self, probs: &[f64]) -> Vec<f64> {
        let d = self.d();
        let p1 = d + 1;
        let mut h = vec![0.0; p1 * p1];
        for i in 0..self.design.rows() {
            let w = probs[i] * (1.0 - probs[i]);
            let row = self.design.row(i);
            h[0] += w;
            for (j, &xj) in row.iter().enumerate() {
                h[j + 1] += w * xj;
                let wj = w * xj;
                let base = (j + 1) * p1 + 1;
                for (k, &xk) in row.iter().enumerate().skip(j) {
                    h[base + k] += wj * xk;
                }
            }
        }
        for j in 1..p1 {
            h[j * p1 + j] += self.lambda;
        }
        // Mirror the upper triangle into the lower.
        for j in 0..p1 {
            for k in (j + 1)..p1 {
                h[k * p1 + j] = h[j * p1 + k];
            }
        }
        h
    }
}

fn validate_inputs(design: &DesignMatrix, labels: &[u8]) -> Result<()> {
    if design.rows() == 0 {
        return Err(CalibError::EmptyInput);
    }
    if design.rows() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: design.rows(),
            actual: labels.len(),
        });
    }
    for (row, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(CalibError::NonBinaryLabel {
                row,
                value: l.to_string(),
            });
        }
    }
    for i in 0..design.rows() {
        if design.row(i).iter().any(|v| !v.is_finite()) {
            return Err(CalibError::NonFiniteInput { row: i });
        }
    }
    Ok(())
}

/// Fit by damped Newton iteration from the null model. Converges when the
/// gradient max-norm drops below `1e-8 * max(1, loss)`.
pub fn fit_ridge_logistic(
    design: &DesignMatrix,
    labels: &[u8],
    lambda: f64,
) -> Result<RidgeLogisticModel> {
    validate_inputs(design, labels)?;
    fit_from_start(design, labels, lambda, None)
}

/// Same solver with an explicit starting point, used to warm-start fits
/// along the lambda path. The minimizer is unique, so the start only
/// affects iteration count.
pub(crate) fn fit_from_start(
    design: &DesignMatrix,
    labels: &[u8],
    lambda: f64,
    start: Option<&[f64]>,
) -> Result<RidgeLogisticModel> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CalibError::InvalidOptions {
            reason: format!("lambda must be positive and finite, got {lambda}"),
        });
    }
    let n = design.rows();
    let d = design.cols();
    let obj = Objective {
        design,
        labels,
        lambda,
    };

    let mut theta = match start {
        Some(t) => {
            debug_assert_eq!(t.len(), d + 1);
            t.to_vec()
        }
        None => {
            let base_rate = labels.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64;
            let mut t = vec![0.0; d + 1];
            t[0] = logit(base_rate.clamp(1e-12, 1.0 - 1e-12));
            t
        }
    };

    let mut z_buf = vec![0.0; n];
    let mut probs = vec![0.0; n];
    let mut trial_probs = vec![0.0; n];
    let mut loss = obj.loss(&theta, &mut z_buf);

    for _ in 0..MAX_NEWTON_ITERS {
        let grad = obj.gradient(&theta, &mut z_buf, &mut probs);
        let grad_max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_max <= GRAD_TOL * loss.max(1.0) {
            return Ok(RidgeLogisticModel {
                intercept: theta[0],
                coefficients: theta[1..].to_vec(),
                lambda,
            });
        }

        let hessian = obj.hessian(&probs);
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut direction = None;
        for jitter_exp in 0..6 {
            let mut h = hessian.clone();
            if jitter_exp > 0 {
                let jitter = 10f64.powi(2 * jitter_exp - 10); // 1e-8 .. 1
                for j in 0..=d {
                    h[j * (d + 1) + j] += jitter;
                }
            }
            if let Some(dir) = cholesky_solve(&mut h, &neg_grad) {
                direction = Some(dir);
                break;
            }
        }
        let direction = direction.ok_or(CalibError::SingularUpdate)?;

        // Backtracking. A strict objective decrease always accepts. Near the
        // optimum the Newton decrement can fall below the float resolution
        // of the sum-form loss while the gradient is still above tolerance;
        // there a step whose loss change sits inside the round-off band is
        // accepted when it strictly shrinks the gradient, which the terminal
        // Newton phase contracts quadratically.
        let noise_band = 1e-12 * loss.abs().max(1.0);
        let mut step = 1.0;
        let mut accepted = false;
        let mut trial = vec![0.0; d + 1];
        for _ in 0..MAX_HALVINGS {
            for ((t, &old), &dir) in trial.iter_mut().zip(&theta).zip(&direction) {
                *t = old + step * dir;
            }
            let trial_loss = obj.loss(&trial, &mut z_buf);
            let mut accept = trial_loss < loss;
            if !accept && trial_loss - loss <= noise_band {
                let trial_grad = obj.gradient(&trial, &mut z_buf, &mut trial_probs);
                let trial_grad_max = trial_grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                accept = trial_grad_max < 0.999 * grad_max;
            }
            if accept {
                theta.copy_from_slice(&trial);
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(CalibError::SingularUpdate);
        }
    }
    Err(CalibError::NonConvergence {
        max_iters: MAX_NEWTON_ITERS,
    })
}

/// Cross-validated search over a lambda grid: stratified folds by seed,
/// mean held-out log-loss per lambda, ties broken toward the larger lambda
/// (more smoothing).
pub fn select_lambda_cv(
    design: &DesignMatrix,
    labels: &[u8],
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<LambdaSearchReport> {
    validate_inputs(design, labels)?;
    if folds < 2 {
        return Err(CalibError::InvalidOptions {
            reason: format!("cross-validation needs at least 2 folds, got {folds}"),
        });
    }
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(CalibError::InvalidOptions {
            reason: "lambda grid must be nonempty with positive entries".to_string(),
        });
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let label_classes: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let assignment = stratified_folds(&label_classes, 2, folds, seed)?;
    check_training_splits_cover_classes(&assignment, &label_classes, 2, folds)?;

    // fold_losses[lambda][fold]
    let mut fold_losses = vec![vec![0.0; folds]; grid.len()];
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..labels.len())
            .filter(|&i| assignment[i] != fold)
            .collect();
        let held_idx: Vec<usize> = (0..labels.len())
            .filter(|&i| assignment[i] == fold)
            .collect();
        let train_design = design.select_rows(&train_idx);
        let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
        let held_design = design.select_rows(&held_idx);
        let held_labels: Vec<u8> = held_idx.iter().map(|&i| labels[i]).collect();

        // Sweep lambda from most to least smoothing, warm-starting each fit.
        let mut warm: Option<Vec<f64>> = None;
        for (g, &lambda) in grid.iter().enumerate().rev() {
            let model =
                fit_from_start(&train_design, &train_labels, lambda, warm.as_deref())?;
            let probs = model.predict(&held_design);
            fold_losses[g][fold] = mean_binary_log_loss(&probs, &held_labels);
            let mut theta = Vec::with_capacity(model.coefficients.len() + 1);
            theta.push(model.intercept);
            theta.extend_from_slice(&model.coefficients);
            warm = Some(theta);
        }
    }

    let cv_losses: Vec<f64> = fold_losses
        .iter()
        .map(|per_fold| per_fold.iter().sum::<f64>() / folds as f64)
        .collect();
    let mut chosen = grid[0];
    let mut best = cv_losses[0];
    for (g, &loss) in cv_losses.iter().enumerate().skip(1) {
        if loss <= best {
            best = loss;
            chosen = grid[g];
        }
    }
    Ok(LambdaSearchReport {
        grid,
        cv_losses,
        chosen,
        fold_count: folds,
        seed,
    })
}
