//! Desk-scale built-in model trainers: multinomial logistic regression,
//! Gaussian naive Bayes, and categorical naive Bayes with add-one smoothing.
//! All three are deterministic; an optional sharpening exponent makes any of
//! them intentionally overconfident for calibration experiments.

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, ModelTrainer, PredictiveModel};
use crate::data::{MulticlassLabels, ProbabilityMatrix};
use crate::error::{CalibError, Result};
use crate::linalg::cholesky_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinTrainerKind {
    MultinomialLogistic,
    GaussianNaiveBayes,
    CategoricalNaiveBayes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerOptions {
    /// Ridge strength for the multinomial logistic fit.
    pub l2: f64,
    /// Variance floor for Gaussian naive Bayes.
    pub variance_floor: f64,
    /// When set, predictions are sharpened to `p^gamma / sum p^gamma`,
    /// making the model deliberately overconfident.
    pub sharpen_gamma: Option<f64>,
}

impl Default for TrainerOptions {
    fn default() -> Self {
        Self {
            l2: 1e-6,
            variance_floor: 1e-9,
            sharpen_gamma: None,
        }
    }
}

/// A validated (kind, options) pair implementing [`ModelTrainer`].
#[derive(Debug, Clone)]
pub struct BuiltinTrainer {
    kind: BuiltinTrainerKind,
    options: TrainerOptions,
}

pub fn builtin_trainer(kind: BuiltinTrainerKind, options: TrainerOptions) -> Result<BuiltinTrainer> {
    if !(options.l2 > 0.0) || !options.l2.is_finite() {
        return Err(CalibError::InvalidOptions {
            reason: format!("l2 must be positive, got {}", options.l2),
        });
    }
    if !(options.variance_floor > 0.0) || !options.variance_floor.is_finite() {
        return Err(CalibError::InvalidOptions {
            reason: format!("variance_floor must be positive, got {}", options.variance_floor),
        });
    }
    if let Some(g) = options.sharpen_gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(CalibError::InvalidOptions {
                reason: format!("sharpen_gamma must be positive, got {g}"),
            });
        }
    }
    Ok(BuiltinTrainer { kind, options })
}

impl ModelTrainer for BuiltinTrainer {
    type Model = BuiltinModel;

    fn train(&self, features: &FeatureMatrix, labels: &MulticlassLabels) -> Result<BuiltinModel> {
        if features.n_rows() != labels.len() {
            return Err(CalibError::DimensionMismatch {
                expected: features.n_rows(),
                actual: labels.len(),
            });
        }
        for (class, &count) in labels.class_counts().iter().enumerate() {
            if count == 0 {
                return Err(CalibError::MissingClassInLabels { class });
            }
        }
        match self.kind {
            BuiltinTrainerKind::MultinomialLogistic => Ok(BuiltinModel::MultinomialLogistic(
                MultinomialLogisticModel::fit(features, labels, &self.options)?,
            )),
            BuiltinTrainerKind::GaussianNaiveBayes => Ok(BuiltinModel::GaussianNb(
                GaussianNbModel::fit(features, labels, &self.options),
            )),
            BuiltinTrainerKind::CategoricalNaiveBayes => Ok(BuiltinModel::CategoricalNb(
                CategoricalNbModel::fit(features, labels, &self.options),
            )),
        }
    }
}

/// Any trained built-in model; serializable as the final-model artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BuiltinModel {
    MultinomialLogistic(MultinomialLogisticModel),
    GaussianNb(GaussianNbModel),
    CategoricalNb(CategoricalNbModel),
}

impl PredictiveModel for BuiltinModel {
    fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        match self {
            Self::MultinomialLogistic(m) => m.predict_proba(features),
            Self::GaussianNb(m) => m.predict_proba(features),
            Self::CategoricalNb(m) => m.predict_proba(features),
        }
    }
}

fn sharpen_row(row: &mut [f64], gamma: Option<f64>) {
    if let Some(g) = gamma {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = v.powf(g);
            sum += *v;
        }
        if sum > 0.0 {
            for v in row.iter_mut() {
                *v /= sum;
            }
        } else {
            let uniform = 1.0 / row.len() as f64;
            row.fill(uniform);
        }
    }
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, m: usize) -> Result<ProbabilityMatrix> {
    let n = rows.len();
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    ProbabilityMatrix::from_row_major(n, m, values, None)
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

/// Softmax regression with the last class as reference; one weight row
/// `[intercept, w_1..w_d]` per non-reference class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialLogisticModel {
    weights: Vec<f64>, // (m - 1) x (d + 1), row-major
    n_classes: usize,
    n_features: usize,
    l2: f64,
    sharpen_gamma: Option<f64>,
}

impl MultinomialLogisticModel {
    fn class_probs(&self, row: &[f64], out: &mut Vec<f64>) {
        let m = self.n_classes;
        let p1 = self.n_features + 1;
        out.clear();
        for a in 0..m - 1 {
            let w = &self.weights[a * p1..(a + 1) * p1];
            let mut z = w[0];
            for (wj, x) in w[1..].iter().zip(row) {
                z += wj * x;
            }
            out.push(z);
        }
        out.push(0.0); // reference class
        let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for z in out.iter_mut() {
            *z = (*z - max).exp();
            sum += *z;
        }
        for z in out.iter_mut() {
            *z /= sum;
        }
    }

    fn fit(
        features: &FeatureMatrix,
        labels: &MulticlassLabels,
        options: &TrainerOptions,
    ) -> Result<Self> {
        let n = features.n_rows();
        let d = features.n_cols();
        let m = labels.n_classes();
        let p1 = d + 1;
        let dim = (m - 1) * p1;
        let l2 = options.l2;

        let mut model = Self {
            weights: vec![0.0; dim],
            n_classes: m,
            n_features: d,
            l2,
            sharpen_gamma: None,
        };

        let objective = |model: &Self| -> f64 {
            let mut probs = Vec::with_capacity(m);
            let mut loss = 0.0;
            for i in 0..n {
                model.class_probs(features.row(i), &mut probs);
                loss -= probs[labels.labels()[i]].max(1e-300).ln();
            }
            let mut penalty = 0.0;
            for a in 0..m - 1 {
                for j in 1..p1 {
                    let w = model.weights[a * p1 + j];
                    penalty += w * w;
                }
            }
            loss + 0.5 * l2 * penalty
        };

        let gradient_max = |model: &Self| -> f64 {
            let mut probs = Vec::with_capacity(m);
            let mut grad = vec![0.0; dim];
            let mut aug = vec![0.0; p1];
            for i in 0..n {
                let row = features.row(i);
                model.class_probs(row, &mut probs);
                aug[0] = 1.0;
                aug[1..].copy_from_slice(row);
                let y = labels.labels()[i];
                for a in 0..m - 1 {
                    let ra = probs[a] - f64::from(u8::from(y == a));
                    for (j, &xj) in aug.iter().enumerate() {
                        grad[a * p1 + j] += ra * xj;
                    }
                }
            }
            for a in 0..m - 1 {
                for j in 1..p1 {
                    grad[a * p1 + j] += l2 * model.weights[a * p1 + j];
                }
            }
            grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()))
        };

        let mut loss = objective(&model);
        let mut probs = Vec::with_capacity(m);
        for _ in 0..200 {
            // Gradient and Hessian over the flattened parameter vector.
            let mut grad = vec![0.0; dim];
            let mut hess = vec![0.0; dim * dim];
            let mut aug = vec![0.0; p1];
            for i in 0..n {
                let row = features.row(i);
                model.class_probs(row, &mut probs);
                aug[0] = 1.0;
                aug[1..].copy_from_slice(row);
                let y = labels.labels()[i];
                for a in 0..m - 1 {
                    let ra = probs[a] - f64::from(u8::from(y == a));
                    for (j, &xj) in aug.iter().enumerate() {
                        grad[a * p1 + j] += ra * xj;
                    }
                    for b in a..m - 1 {
                        let c = if a == b {
                            probs[a] * (1.0 - probs[a])
                        } else {
                            -probs[a] * probs[b]
                        };
                        for (j, &xj) in aug.iter().enumerate() {
                            let cxj = c * xj;
                            for (k, &xk) in aug.iter().enumerate() {
                                hess[(a * p1 + j) * dim + b * p1 + k] += cxj * xk;
                            }
                        }
                    }
                }
            }
            // Mirror the class blocks and add the ridge.
            for a in 0..m - 1 {
                for b in (a + 1)..m - 1 {
                    for j in 0..p1 {
                        for k in 0..p1 {
                            hess[(b * p1 + j) * dim + a * p1 + k] =
                                hess[(a * p1 + k) * dim + b * p1 + j];
                        }
                    }
                }
                for j in 1..p1 {
                    grad[a * p1 + j] += l2 * model.weights[a * p1 + j];
                    hess[(a * p1 + j) * dim + a * p1 + j] += l2;
                }
            }

            let grad_max = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
            if grad_max <= 1e-8 * loss.max(1.0) {
                model.sharpen_gamma = options.sharpen_gamma;
                return Ok(model);
            }

            let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
            let mut direction = None;
            for jitter_exp in 0..6 {
                let mut h = hess.clone();
                if jitter_exp > 0 {
                    let jitter = 10f64.powi(2 * jitter_exp - 10);
                    for j in 0..dim {
                        h[j * dim + j] += jitter;
                    }
                }
                if let Some(dir) = cholesky_solve(&mut h, &neg_grad) {
                    direction = Some(dir);
                    break;
                }
            }
            let direction = direction.ok_or(CalibError::SingularUpdate)?;

            // Same acceptance rule as the binary solver: strict decrease, or
            // a loss change inside the round-off band paired with a strict
            // gradient contraction.
            let noise_band = 1e-12 * loss.abs().max(1.0);
            let mut step = 1.0;
            let mut accepted = false;
            let saved = model.weights.clone();
            for _ in 0..60 {
                for (w, (&old, &dir)) in model
                    .weights
                    .iter_mut()
                    .zip(saved.iter().zip(&direction))
                {
                    *w = old + step * dir;
                }
                let trial = objective(&model);
                let mut accept = trial < loss;
                if !accept && trial - loss <= noise_band {
                    accept = gradient_max(&model) < 0.999 * grad_max;
                }
                if accept {
                    loss = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                model.weights = saved;
                return Err(CalibError::SingularUpdate);
            }
        }
        Err(CalibError::NonConvergence { max_iters: 200 })
    }

    fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        if features.n_cols() != self.n_features {
            return Err(CalibError::DimensionMismatch {
                expected: self.n_features,
                actual: features.n_cols(),
            });
        }
        let mut rows = Vec::with_capacity(features.n_rows());
        let mut probs = Vec::with_capacity(self.n_classes);
        for i in 0..features.n_rows() {
            self.class_probs(features.row(i), &mut probs);
            let mut row = probs.clone();
            sharpen_row(&mut row, self.sharpen_gamma);
            rows.push(row);
        }
        rows_to_matrix(rows, self.n_classes)
    }
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

/// Per-class feature means and (floored) variances with maximum-likelihood
/// class priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,     // [class][feature]
    variances: Vec<Vec<f64>>, // [class][feature]
    sharpen_gamma: Option<f64>,
}

impl GaussianNbModel {
    fn fit(features: &FeatureMatrix, labels: &MulticlassLabels, options: &TrainerOptions) -> Self {
        let n = features.n_rows();
        let d = features.n_cols();
        let m = labels.n_classes();
        let counts = labels.class_counts();
        let mut means = vec![vec![0.0; d]; m];
        let mut variances = vec![vec![0.0; d]; m];
        for i in 0..n {
            let c = labels.labels()[i];
            for (j, &x) in features.row(i).iter().enumerate() {
                means[c][j] += x;
            }
        }
        for c in 0..m {
            for j in 0..d {
                means[c][j] /= counts[c] as f64;
            }
        }
        for i in 0..n {
            let c = labels.labels()[i];
            for (j, &x) in features.row(i).iter().enumerate() {
                let diff = x - means[c][j];
                variances[c][j] += diff * diff;
            }
        }
        for c in 0..m {
            for j in 0..d {
                variances[c][j] = (variances[c][j] / counts[c] as f64).max(options.variance_floor);
            }
        }
        let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self {
            priors,
            means,
            variances,
            sharpen_gamma: options.sharpen_gamma,
        }
    }

    fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let d = self.means[0].len();
        if features.n_cols() != d {
            return Err(CalibError::DimensionMismatch {
                expected: d,
                actual: features.n_cols(),
            });
        }
        let m = self.priors.len();
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut rows = Vec::with_capacity(features.n_rows());
        for i in 0..features.n_rows() {
            let x = features.row(i);
            let mut log_joint: Vec<f64> = (0..m)
                .map(|c| {
                    let mut lj = self.priors[c].max(1e-300).ln();
                    for j in 0..d {
                        let v = self.variances[c][j];
                        let diff = x[j] - self.means[c][j];
                        lj -= 0.5 * (ln_2pi + v.ln()) + diff * diff / (2.0 * v);
                    }
                    lj
                })
                .collect();
            let max = log_joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for lj in log_joint.iter_mut() {
                *lj = (*lj - max).exp();
                sum += *lj;
            }
            let mut row: Vec<f64> = log_joint.into_iter().map(|v| v / sum).collect();
            sharpen_row(&mut row, self.sharpen_gamma);
            rows.push(row);
        }
        rows_to_matrix(rows, m)
    }
}

// ---------------------------------------------------------------------------
// Categorical naive Bayes
// ---------------------------------------------------------------------------

/// Add-one-smoothed categorical naive Bayes. Every feature is treated as
/// categorical over the distinct values seen in training; unseen values at
/// prediction time receive the smoothing mass `1 / (n_c + V_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalNbModel {
    class_counts: Vec<usize>,
    n_rows: usize,
    feature_values: Vec<Vec<f64>>,      // [feature] -> sorted distinct codes
    value_counts: Vec<Vec<Vec<usize>>>, // [feature][class][value index]
    sharpen_gamma: Option<f64>,
}

impl CategoricalNbModel {
    fn fit(features: &FeatureMatrix, labels: &MulticlassLabels, options: &TrainerOptions) -> Self {
        let n = features.n_rows();
        let d = features.n_cols();
        let m = labels.n_classes();

        let mut feature_values: Vec<Vec<f64>> = Vec::with_capacity(d);
        for j in 0..d {
            let mut vals: Vec<f64> = (0..n).map(|i| features.row(i)[j]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            feature_values.push(vals);
        }
        let mut value_counts: Vec<Vec<Vec<usize>>> = feature_values
            .iter()
            .map(|vals| vec![vec![0usize; vals.len()]; m])
            .collect();
        for i in 0..n {
            let c = labels.labels()[i];
            for (j, &x) in features.row(i).iter().enumerate() {
                let idx = feature_values[j]
                    .binary_search_by(|v| v.partial_cmp(&x).unwrap())
                    .expect("training value must be present");
                value_counts[j][c][idx] += 1;
            }
        }
        Self {
            class_counts: labels.class_counts(),
            n_rows: n,
            feature_values,
            value_counts,
            sharpen_gamma: options.sharpen_gamma,
        }
    }

    fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let d = self.feature_values.len();
        if features.n_cols() != d {
            return Err(CalibError::DimensionMismatch {
                expected: d,
                actual: features.n_cols(),
            });
        }
        let m = self.class_counts.len();
        let mut rows = Vec::with_capacity(features.n_rows());
        for i in 0..features.n_rows() {
            let x = features.row(i);
            let mut log_joint: Vec<f64> = (0..m)
                .map(|c| {
                    let n_c = self.class_counts[c] as f64;
                    let mut lj = (n_c / self.n_rows as f64).ln();
                    for j in 0..d {
                        let v_j = self.feature_values[j].len() as f64;
                        let count = self.feature_values[j]
                            .binary_search_by(|v| v.partial_cmp(&x[j]).unwrap())
                            .map(|idx| self.value_counts[j][c][idx])
                            .unwrap_or(0);
                        lj += ((count as f64 + 1.0) / (n_c + v_j)).ln();
                    }
                    lj
                })
                .collect();
            let max = log_joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for lj in log_joint.iter_mut() {
                *lj = (*lj - max).exp();
                sum += *lj;
            }
            let mut row: Vec<f64> = log_joint.into_iter().map(|v| v / sum).collect();
            sharpen_row(&mut row, self.sharpen_gamma);
            rows.push(row);
        }
        rows_to_matrix(rows, m)
    }
}
