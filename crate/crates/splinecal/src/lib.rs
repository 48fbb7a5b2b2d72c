//! Probability calibration with smoothing splines.
//!
//! The core method fits a natural cubic spline basis over the calibration
//! scores and runs an L2-regularized logistic regression on it, choosing the
//! penalty by cross-validated log-loss. An optional compact-logit transform
//! expands resolution near 0 and 1 for overconfident score distributions.
//! Multiclass inputs are calibrated column by column and renormalized onto
//! the simplex, and a cross-validated pipeline lets all of the data serve
//! both model training and calibration. Platt scaling, isotonic regression,
//! and clipping are included as baselines, along with log-loss, Brier score,
//! accuracy, and reliability-diagram metrics.
//!
//! Fitted calibrators are immutable, thread-safe, and serialize to
//! versioned JSON that round-trips predictions bit for bit.

pub mod calibrate;
pub mod cv;
pub mod data;
pub mod error;
pub mod metrics;
pub mod ridge;
pub mod spline;
pub mod transform;

mod folds;
mod linalg;

pub use calibrate::{
    clip_probabilities, fit_isotonic, fit_multiclass, fit_platt, fit_spline_binary,
    load_calibrator, predict_multiclass, save_calibrator, BinaryCalibrator, BinaryFitMethod,
    Calibrator, ClippingCalibrator, CompactLogitMode, IsotonicCalibrator, MulticlassCalibrator,
    PlattCalibrator, SplineCalibrator, SplineConfig, CLIPPING_BASELINE_GRID,
};
pub use cv::{
    builtin_trainer, cross_validated_calibrate, load_feature_matrix, make_stratified_folds,
    BuiltinModel, BuiltinTrainer, BuiltinTrainerKind, CalibratedModel, CvConfig, FeatureMatrix,
    ModelTrainer, PredictiveModel, TrainerOptions,
};
pub use data::{
    load_labeled_scores, load_probability_matrix, load_scores, write_probability_matrix,
    write_scores, LabeledScores, MulticlassLabels, ProbabilityMatrix,
};
pub use error::{CalibError, Result};
pub use linalg::DesignMatrix;
pub use metrics::{
    accuracy, binary_log_loss, brier_score, evaluate, log_loss, reliability_bins, MetricsReport,
    ReliabilityBin, ReliabilityBins,
};
pub use ridge::{
    default_lambda_grid, fit_ridge_logistic, log_spaced_grid, select_lambda_cv,
    LambdaSearchReport, RidgeLogisticModel,
};
pub use spline::{natural_basis, select_knots, BasisMatrix, KnotSet, KnotStrategy};
pub use transform::{choose_epsilon, compact_logit, compact_logit_vec, CompactLogitParams};

/// Default RNG seed used whenever the caller does not supply one; fixed so
/// every run is reproducible out of the box.
pub const DEFAULT_SEED: u64 = 42;
