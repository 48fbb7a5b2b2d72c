//! Platt scaling: a one-variable logistic regression of outcomes on scores.

use serde::{Deserialize, Serialize};

use crate::data::LabeledScores;
use crate::error::{CalibError, Result};
use crate::linalg::DesignMatrix;
use crate::ridge::{fit_ridge_logistic, sigmoid};

/// Nominal ridge keeping the fit finite on separable data; small enough to
/// leave the unregularized solution untouched otherwise.
const PLATT_RIDGE: f64 = 1e-8;

/// `p = sigmoid(slope * score + intercept)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    slope: f64,
    intercept: f64,
}

impl PlattCalibrator {
    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !self.slope.is_finite() || !self.intercept.is_finite() {
            return Err(CalibError::CorruptFile {
                reason: "non-finite Platt parameters".to_string(),
            });
        }
        Ok(())
    }

    pub fn predict_one(&self, score: f64) -> f64 {
        sigmoid(self.slope * score + self.intercept)
    }

    pub fn predict(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.predict_one(s)).collect()
    }
}

/// Fit by logistic regression of the labels on the raw scores.
pub fn fit_platt(data: &LabeledScores) -> Result<PlattCalibrator> {
    let labels = data.labels();
    if labels.iter().all(|&l| l == 1) || labels.iter().all(|&l| l == 0) {
        return Err(CalibError::SingleClassData);
    }
    let design = DesignMatrix::from_row_major(data.len(), 1, data.scores().to_vec());
    let model = fit_ridge_logistic(&design, labels, PLATT_RIDGE)?;
    Ok(PlattCalibrator {
        slope: model.coefficients()[0],
        intercept: model.intercept(),
    })
}
