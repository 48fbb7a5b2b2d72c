//! Calibration methods: spline calibration with an optional compact-logit
//! pre-transform, Platt scaling, isotonic regression, clipping, and the
//! column-wise multiclass composite, plus versioned JSON serialization.
//!
//! Fitted calibrators are immutable and safe to share across threads;
//! prediction is pure.

mod clipping;
mod isotonic;
mod multiclass;
mod platt;
mod serialize;
mod spline;

pub use clipping::{clip_probabilities, ClippingCalibrator, CLIPPING_BASELINE_GRID};
pub use isotonic::{fit_isotonic, IsotonicCalibrator};
pub use multiclass::{fit_multiclass, predict_multiclass, BinaryFitMethod, MulticlassCalibrator};
pub use platt::{fit_platt, PlattCalibrator};
pub use serialize::{load_calibrator, save_calibrator, SCHEMA_VERSION};
pub use spline::{fit_spline_binary, CompactLogitMode, SplineCalibrator, SplineConfig};

use serde::{Deserialize, Serialize};

use crate::data::ProbabilityMatrix;
use crate::error::{CalibError, Result};

/// Any fitted binary calibrator. Used per class inside the multiclass
/// composite and as the binary half of [`Calibrator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinaryCalibrator {
    Spline(SplineCalibrator),
    Platt(PlattCalibrator),
    Isotonic(IsotonicCalibrator),
    Clipping(ClippingCalibrator),
}

impl BinaryCalibrator {
    /// Calibrated probabilities for binary scores.
    pub fn predict(&self, scores: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Spline(c) => c.predict(scores),
            Self::Platt(c) => Ok(c.predict(scores)),
            Self::Isotonic(c) => Ok(c.predict(scores)),
            Self::Clipping(c) => c.predict_binary(scores),
        }
    }

    /// The per-column map used by the multiclass composite. Identical to
    /// `predict` except for clipping, whose column form is the raw floor
    /// `max(s, p_min)`; the composite's row normalization completes it.
    pub(crate) fn column_values(&self, scores: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Clipping(c) => Ok(scores.iter().map(|&s| c.clip_score(s)).collect()),
            other => other.predict(scores),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Self::Spline(c) => c.validate(),
            Self::Platt(c) => c.validate(),
            Self::Isotonic(c) => c.validate(),
            Self::Clipping(c) => c.validate(),
        }
    }
}

/// A fitted, serializable calibrator of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator {
    Spline(SplineCalibrator),
    Platt(PlattCalibrator),
    Isotonic(IsotonicCalibrator),
    Clipping(ClippingCalibrator),
    Multiclass(MulticlassCalibrator),
}

impl Calibrator {
    /// Apply to binary scores. Errors for a multiclass calibrator.
    pub fn predict_binary(&self, scores: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Spline(c) => c.predict(scores),
            Self::Platt(c) => Ok(c.predict(scores)),
            Self::Isotonic(c) => Ok(c.predict(scores)),
            Self::Clipping(c) => c.predict_binary(scores),
            Self::Multiclass(c) => Err(CalibError::DimensionMismatch {
                expected: c.n_classes(),
                actual: 1,
            }),
        }
    }

    /// Apply to a probability matrix. Binary kinds error except clipping,
    /// which floors every class and renormalizes.
    pub fn predict_matrix(&self, probs: &ProbabilityMatrix) -> Result<ProbabilityMatrix> {
        match self {
            Self::Multiclass(c) => predict_multiclass(c, probs),
            Self::Clipping(c) => clip_probabilities(probs, c),
            _ => Err(CalibError::DimensionMismatch {
                expected: 1,
                actual: probs.n_classes(),
            }),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Spline(_) => "spline",
            Self::Platt(_) => "platt",
            Self::Isotonic(_) => "isotonic",
            Self::Clipping(_) => "clipping",
            Self::Multiclass(_) => "multiclass",
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Self::Spline(c) => c.validate(),
            Self::Platt(c) => c.validate(),
            Self::Isotonic(c) => c.validate(),
            Self::Clipping(c) => c.validate(),
            Self::Multiclass(c) => c.validate(),
        }
    }
}

impl From<BinaryCalibrator> for Calibrator {
    fn from(b: BinaryCalibrator) -> Self {
        match b {
            BinaryCalibrator::Spline(c) => Self::Spline(c),
            BinaryCalibrator::Platt(c) => Self::Platt(c),
            BinaryCalibrator::Isotonic(c) => Self::Isotonic(c),
            BinaryCalibrator::Clipping(c) => Self::Clipping(c),
        }
    }
}
