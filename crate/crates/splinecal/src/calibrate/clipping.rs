//! Clipping: floor every class probability at `p_min`, then renormalize
//! the row. A common baseline for overconfident multiclass scores.

use serde::{Deserialize, Serialize};

use crate::data::ProbabilityMatrix;
use crate::error::{CalibError, Result};

/// The conventional grid for a best-of-four clipping baseline.
pub const CLIPPING_BASELINE_GRID: [f64; 4] = [0.01, 0.001, 0.0001, 0.00001];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClippingCalibrator {
    p_min: f64,
}

impl ClippingCalibrator {
    /// `p_min` must lie strictly inside `(0, 0.5)`; the tighter bound
    /// `p_min < 1/m` is checked against each matrix it is applied to.
    pub fn new(p_min: f64) -> Result<Self> {
        if !(p_min > 0.0 && p_min < 0.5) || !p_min.is_finite() {
            return Err(CalibError::InvalidPMin { p_min, n_classes: 2 });
        }
        Ok(Self { p_min })
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min < 0.5) {
            return Err(CalibError::CorruptFile {
                reason: format!("p_min {} outside (0, 0.5)", self.p_min),
            });
        }
        Ok(())
    }

    /// The per-column floor used inside the multiclass composite.
    pub(crate) fn clip_score(&self, score: f64) -> f64 {
        score.max(self.p_min)
    }

    /// Binary application: clip the two-class row `(1 - s, s)` and return
    /// the renormalized positive-class probability.
    pub fn predict_binary(&self, scores: &[f64]) -> Result<Vec<f64>> {
        scores
            .iter()
            .map(|&s| {
                if !s.is_finite() || s < -1e-12 || s > 1.0 + 1e-12 {
                    return Err(CalibError::DomainError { value: s });
                }
                let s = s.clamp(0.0, 1.0);
                let pos = s.max(self.p_min);
                let neg = (1.0 - s).max(self.p_min);
                Ok(pos / (pos + neg))
            })
            .collect()
    }
}

/// Floor every entry at `p_min` and renormalize each row to sum to one.
pub fn clip_probabilities(
    probs: &ProbabilityMatrix,
    params: &ClippingCalibrator,
) -> Result<ProbabilityMatrix> {
    let m = probs.n_classes();
    if params.p_min >= 1.0 / m as f64 {
        return Err(CalibError::InvalidPMin {
            p_min: params.p_min,
            n_classes: m,
        });
    }
    let mut values = Vec::with_capacity(probs.n_rows() * m);
    for i in 0..probs.n_rows() {
        let clipped: Vec<f64> = probs.row(i).iter().map(|&v| v.max(params.p_min)).collect();
        let sum: f64 = clipped.iter().sum();
        values.extend(clipped.into_iter().map(|v| v / sum));
    }
    ProbabilityMatrix::from_row_major(
        probs.n_rows(),
        m,
        values,
        Some(probs.class_names().to_vec()),
    )
}
