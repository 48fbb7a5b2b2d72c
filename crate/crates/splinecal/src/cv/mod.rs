//! Cross-validated calibration: train the final model on all data, build
//! out-of-fold predictions for every row, fit the multiclass calibrator on
//! the stacked predictions, and return the composed model. All of the data
//! serves both model training and calibration.
//!
//! One caveat carries over from the procedure itself: fold models and the
//! final model are trained with identical options, so the calibration
//! scores come from models slightly smaller than the one deployed. More
//! folds shrink that gap at the cost of compute.

mod trainers;

pub use trainers::{
    builtin_trainer, BuiltinModel, BuiltinTrainer, BuiltinTrainerKind, TrainerOptions,
};

use crate::calibrate::{fit_multiclass, predict_multiclass, BinaryFitMethod, MulticlassCalibrator};
use crate::data::{MulticlassLabels, ProbabilityMatrix};
use crate::error::{CalibError, Result};
use crate::folds::{check_training_splits_cover_classes, stratified_folds, unstratified_folds};
use crate::DEFAULT_SEED;

/// In-memory feature matrix, row-major. Categorical features are stored as
/// category codes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(CalibError::EmptyInput);
        }
        if values.len() != n_rows * n_cols {
            return Err(CalibError::DimensionMismatch {
                expected: n_rows * n_cols,
                actual: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CalibError::NonFiniteInput { row: i / n_cols });
            }
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            values,
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }
}

/// Fold layout for cross-validated calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: DEFAULT_SEED,
            stratified: true,
        }
    }
}

/// A trained model that emits per-class probabilities.
pub trait PredictiveModel: Send + Sync {
    fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix>;
}

/// Anything that can train a [`PredictiveModel`]. Training must be
/// deterministic given its options, and trainers must be safely invocable
/// from multiple threads on disjoint data.
pub trait ModelTrainer: Send + Sync {
    type Model: PredictiveModel;

    fn train(&self, features: &FeatureMatrix, labels: &MulticlassLabels) -> Result<Self::Model>;
}

/// The composed result: the final model trained on all rows, the calibrator
/// fitted on its out-of-fold predictions, and the stacked out-of-fold matrix
/// itself for diagnostics.
#[derive(Debug, Clone)]
pub struct CalibratedModel<M: PredictiveModel> {
    model: M,
    calibrator: MulticlassCalibrator,
    oof_predictions: ProbabilityMatrix,
}

impl<M: PredictiveModel> CalibratedModel<M> {
    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn calibrator(&self) -> &MulticlassCalibrator {
        &self.calibrator
    }

    /// The stacked matrix from step 4, aligned with the original row order:
    /// row `i` was predicted by the fold model not trained on row `i`.
    pub fn oof_predictions(&self) -> &ProbabilityMatrix {
        &self.oof_predictions
    }

    pub fn into_parts(self) -> (M, MulticlassCalibrator) {
        (self.model, self.calibrator)
    }

    /// Model prediction followed by calibration; rows stay on the simplex.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<ProbabilityMatrix> {
        let raw = self.model.predict_proba(features)?;
        predict_multiclass(&self.calibrator, &raw)
    }
}

/// Load a feature CSV for the built-in trainers: every column except
/// `label_column` is a feature, in header order. Columns that fail to parse
/// as numbers are treated as categoricals and encoded as codes over their
/// sorted distinct values; label values (numeric or string) are mapped the
/// same way, and the returned names identify the classes in code order.
pub fn load_feature_matrix(
    path: impl AsRef<std::path::Path>,
    label_column: &str,
) -> Result<(FeatureMatrix, MulticlassLabels, Vec<String>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CalibError::FileNotFound {
                path: path.to_path_buf(),
            }
        } else {
            CalibError::Io(e)
        }
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| CalibError::MissingColumn {
            column: label_column.to_string(),
        })?;
    let feature_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx).collect();
    if feature_idx.is_empty() {
        return Err(CalibError::MissingColumn {
            column: "at least one feature column".to_string(),
        });
    }

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }
    if records.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    let n = records.len();

    // Encode each feature column: numeric when every cell parses, otherwise
    // categorical codes over the sorted distinct strings.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(feature_idx.len());
    for &idx in &feature_idx {
        let cells: Vec<&str> = records.iter().map(|r| r[idx].trim()).collect();
        let parsed: Option<Vec<f64>> = cells
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(values) => columns.push(values),
            None => {
                let mut distinct: Vec<&str> = cells.clone();
                distinct.sort_unstable();
                distinct.dedup();
                columns.push(
                    cells
                        .iter()
                        .map(|c| distinct.binary_search(c).unwrap() as f64)
                        .collect(),
                );
            }
        }
    }

    // Map label values to classes over the sorted distinct values.
    let label_cells: Vec<&str> = records.iter().map(|r| r[label_idx].trim()).collect();
    let all_numeric: Option<Vec<f64>> = label_cells
        .iter()
        .map(|c| c.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    let (labels, class_names) = match all_numeric {
        Some(values) => {
            let mut distinct = values.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            let labels: Vec<usize> = values
                .iter()
                .map(|v| {
                    distinct
                        .binary_search_by(|d| d.partial_cmp(v).unwrap())
                        .unwrap()
                })
                .collect();
            let names: Vec<String> = distinct.iter().map(|v| v.to_string()).collect();
            (labels, names)
        }
        None => {
            let mut distinct: Vec<&str> = label_cells.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let labels: Vec<usize> = label_cells
                .iter()
                .map(|c| distinct.binary_search(c).unwrap())
                .collect();
            let names = distinct.iter().map(|s| s.to_string()).collect();
            (labels, names)
        }
    };
    if class_names.len() < 2 {
        return Err(CalibError::SingleClassData);
    }

    let mut values = Vec::with_capacity(n * columns.len());
    for i in 0..n {
        for col in &columns {
            values.push(col[i]);
        }
    }
    let features = FeatureMatrix::from_row_major(n, columns.len(), values)?;
    let labels = MulticlassLabels::new(labels, class_names.len())?;
    Ok((features, labels, class_names))
}

/// Fold assignment for `labels` under `cv`: deterministic in the seed, fold
/// sizes differing by at most one overall and (when stratified) per class.
pub fn make_stratified_folds(labels: &MulticlassLabels, cv: &CvConfig) -> Result<Vec<usize>> {
    if cv.stratified {
        stratified_folds(labels.labels(), labels.n_classes(), cv.folds, cv.seed)
    } else {
        unstratified_folds(labels.len(), cv.folds, cv.seed)
    }
}

/// Cross-validated calibration:
/// 1. train the final model on all rows;
/// 2. assign folds;
/// 3. for each fold, train on the remaining rows and predict the fold;
/// 4. stack those predictions aligned with the original row order;
/// 5. fit the multiclass calibrator on the stacked matrix;
/// 6. return the composed model.
///
/// A fold-model failure aborts the pipeline: a partial stacked matrix would
/// silently bias the calibrator.
pub fn cross_validated_calibrate<T: ModelTrainer>(
    features: &FeatureMatrix,
    labels: &MulticlassLabels,
    trainer: &T,
    cv: &CvConfig,
    method: &BinaryFitMethod,
) -> Result<CalibratedModel<T::Model>> {
    if features.n_rows() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: features.n_rows(),
            actual: labels.len(),
        });
    }

    let final_model = trainer.train(features, labels)?;

    let assignment = make_stratified_folds(labels, cv)?;
    check_training_splits_cover_classes(
        &assignment,
        labels.labels(),
        labels.n_classes(),
        cv.folds,
    )?;

    let n = labels.len();
    let m = labels.n_classes();
    let mut stacked = vec![0.0; n * m];
    for fold in 0..cv.folds {
        let train_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
        let held_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
        let train_features = features.select_rows(&train_idx);
        let train_labels = MulticlassLabels::new(
            train_idx.iter().map(|&i| labels.labels()[i]).collect(),
            m,
        )?;
        let fold_model =
            trainer
                .train(&train_features, &train_labels)
                .map_err(|e| CalibError::TrainerFailure {
                    fold,
                    reason: e.to_string(),
                })?;
        let predictions = fold_model.predict_proba(&features.select_rows(&held_idx))?;
        if predictions.n_classes() != m {
            return Err(CalibError::DimensionMismatch {
                expected: m,
                actual: predictions.n_classes(),
            });
        }
        for (local, &original) in held_idx.iter().enumerate() {
            stacked[original * m..(original + 1) * m].copy_from_slice(predictions.row(local));
        }
    }

    let oof = ProbabilityMatrix::from_row_major(n, m, stacked, None)?;
    let calibrator = fit_multiclass(&oof, labels, method)?;
    Ok(CalibratedModel {
        model: final_model,
        calibrator,
        oof_predictions: oof,
    })
}
