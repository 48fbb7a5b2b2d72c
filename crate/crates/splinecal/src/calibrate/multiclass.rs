//! Column-wise multiclass calibration: one binary calibrator per class,
//! applied to its probability column, with the results renormalized so
//! every output row lies on the simplex.

use serde::{Deserialize, Serialize};

use super::{fit_isotonic, fit_platt, fit_spline_binary, BinaryCalibrator, SplineConfig};
use crate::data::{LabeledScores, MulticlassLabels, ProbabilityMatrix};
use crate::error::{CalibError, Result};

/// Rows whose pre-normalization sum falls below this are replaced by the
/// uniform distribution; an inference-time input must always yield a usable
/// distribution.
const UNDERFLOW_FALLBACK: f64 = 1e-12;

/// Which binary method to fit on each class column.
#[derive(Debug, Clone)]
pub enum BinaryFitMethod {
    /// Spline calibration; per-class seeds are derived from the config seed
    /// and the class index, and each column chooses its own epsilon.
    Spline(SplineConfig),
    Platt,
    Isotonic,
}

/// One fitted binary calibrator per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassCalibrator {
    per_class: Vec<BinaryCalibrator>,
}

impl MulticlassCalibrator {
    pub fn from_per_class(per_class: Vec<BinaryCalibrator>) -> Result<Self> {
        if per_class.len() < 2 {
            return Err(CalibError::DimensionMismatch {
                expected: 2,
                actual: per_class.len(),
            });
        }
        Ok(Self { per_class })
    }

    pub fn per_class(&self) -> &[BinaryCalibrator] {
        &self.per_class
    }

    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.per_class.len() < 2 {
            return Err(CalibError::CorruptFile {
                reason: "multiclass calibrator needs at least two classes".to_string(),
            });
        }
        for c in &self.per_class {
            c.validate()?;
        }
        Ok(())
    }
}

fn derive_seed(base: u64, stream: u64) -> u64 {
    // SplitMix64 step keyed by the stream index: deterministic, and
    // distinct per class regardless of scheduling.
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fit one binary calibrator per class on (column i, one-vs-rest indicator).
pub fn fit_multiclass(
    probs: &ProbabilityMatrix,
    labels: &MulticlassLabels,
    method: &BinaryFitMethod,
) -> Result<MulticlassCalibrator> {
    if probs.n_rows() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: probs.n_rows(),
            actual: labels.len(),
        });
    }
    if probs.n_classes() != labels.n_classes() {
        return Err(CalibError::DimensionMismatch {
            expected: probs.n_classes(),
            actual: labels.n_classes(),
        });
    }
    for (class, &count) in labels.class_counts().iter().enumerate() {
        if count == 0 {
            return Err(CalibError::MissingClassInLabels { class });
        }
    }

    let mut per_class = Vec::with_capacity(probs.n_classes());
    for class in 0..probs.n_classes() {
        let data = LabeledScores::new(probs.column(class), labels.indicator(class))?;
        let fitted = match method {
            BinaryFitMethod::Spline(config) => {
                let mut per_class_config = config.clone();
                per_class_config.seed = derive_seed(config.seed, class as u64);
                BinaryCalibrator::Spline(fit_spline_binary(&data, &per_class_config)?)
            }
            BinaryFitMethod::Platt => BinaryCalibrator::Platt(fit_platt(&data)?),
            BinaryFitMethod::Isotonic => BinaryCalibrator::Isotonic(fit_isotonic(&data)?),
        };
        per_class.push(fitted);
    }
    MulticlassCalibrator::from_per_class(per_class)
}

/// Apply the composite: calibrate each column, then renormalize every row.
/// Rows whose calibrated sum underflows become uniform.
pub fn predict_multiclass(
    cal: &MulticlassCalibrator,
    probs: &ProbabilityMatrix,
) -> Result<ProbabilityMatrix> {
    let m = cal.n_classes();
    if probs.n_classes() != m {
        return Err(CalibError::DimensionMismatch {
            expected: m,
            actual: probs.n_classes(),
        });
    }
    let mut columns = Vec::with_capacity(m);
    for class in 0..m {
        columns.push(cal.per_class[class].column_values(&probs.column(class))?);
    }
    let n = probs.n_rows();
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        let sum: f64 = columns.iter().map(|c| c[i]).sum();
        if sum < UNDERFLOW_FALLBACK {
            values.extend(std::iter::repeat(1.0 / m as f64).take(m));
        } else {
            values.extend(columns.iter().map(|c| c[i] / sum));
        }
    }
    ProbabilityMatrix::from_row_major(n, m, values, Some(probs.class_names().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::{ClippingCalibrator, CompactLogitMode, IsotonicCalibrator};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_calibrator(value: f64) -> BinaryCalibrator {
        // A single-block isotonic map is the constant function.
        BinaryCalibrator::Isotonic(IsotonicCalibrator::from_blocks(vec![], vec![value]))
    }

    fn simplex_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ProbabilityMatrix {
        let mut values = Vec::with_capacity(n * m);
        for _ in 0..n {
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            values.extend(raw.into_iter().map(|v| v / sum));
        }
        ProbabilityMatrix::from_row_major(n, m, values, None).unwrap()
    }

    #[test]
    fn identity_columns_preserve_a_simplex_row() {
        let cal = MulticlassCalibrator::from_per_class(vec![
            constant_calibrator(0.2),
            constant_calibrator(0.3),
            constant_calibrator(0.5),
        ])
        .unwrap();
        let input =
            ProbabilityMatrix::from_row_major(1, 3, vec![0.2, 0.3, 0.5], None).unwrap();
        let out = predict_multiclass(&cal, &input).unwrap();
        assert!((out.get(0, 0) - 0.2).abs() < 1e-15);
        assert!((out.get(0, 1) - 0.3).abs() < 1e-15);
        assert!((out.get(0, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_columns_normalize_to_uniform() {
        let cal = MulticlassCalibrator::from_per_class(vec![
            constant_calibrator(0.7),
            constant_calibrator(0.7),
            constant_calibrator(0.7),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = simplex_rows(&mut rng, 5, 3);
        let out = predict_multiclass(&cal, &input).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                assert!((out.get(i, j) - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn underflowing_rows_fall_back_to_uniform() {
        let cal = MulticlassCalibrator::from_per_class(vec![
            constant_calibrator(0.0),
            constant_calibrator(0.0),
        ])
        .unwrap();
        let input = ProbabilityMatrix::from_row_major(1, 2, vec![0.4, 0.6], None).unwrap();
        let out = predict_multiclass(&cal, &input).unwrap();
        assert!((out.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((out.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rows_always_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = simplex_rows(&mut rng, 200, 4);
        let cal = MulticlassCalibrator::from_per_class(vec![
            BinaryCalibrator::Clipping(ClippingCalibrator::new(0.01).unwrap()),
            constant_calibrator(0.4),
            constant_calibrator(0.1),
            BinaryCalibrator::Clipping(ClippingCalibrator::new(0.001).unwrap()),
        ])
        .unwrap();
        let out = predict_multiclass(&cal, &input).unwrap();
        for i in 0..out.n_rows() {
            let sum: f64 = out.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn two_class_case_reduces_to_binary_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 600;
        let mut values = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let p: f64 = rng.random_range(0.02..0.98);
            values.push(1.0 - p);
            values.push(p);
            labels.push(usize::from(rng.random_range(0.0..1.0) < p));
        }
        let probs = ProbabilityMatrix::from_row_major(n, 2, values, None).unwrap();
        let labels = MulticlassLabels::new(labels, 2).unwrap();
        let cal = fit_multiclass(&probs, &labels, &BinaryFitMethod::Isotonic).unwrap();
        assert_eq!(cal.n_classes(), 2);
        let out = predict_multiclass(&cal, &probs).unwrap();
        for i in 0..n {
            let sum: f64 = out.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_class_is_rejected() {
        let probs =
            ProbabilityMatrix::from_row_major(2, 3, vec![0.2, 0.3, 0.5, 0.1, 0.2, 0.7], None)
                .unwrap();
        let labels = MulticlassLabels::new(vec![0, 2], 3).unwrap();
        let err = fit_multiclass(&probs, &labels, &BinaryFitMethod::Isotonic).unwrap_err();
        assert!(matches!(err, CalibError::MissingClassInLabels { class: 1 }));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let cal = MulticlassCalibrator::from_per_class(vec![
            constant_calibrator(0.5),
            constant_calibrator(0.5),
            constant_calibrator(0.5),
        ])
        .unwrap();
        let input = ProbabilityMatrix::from_row_major(1, 2, vec![0.4, 0.6], None).unwrap();
        let err = predict_multiclass(&cal, &input).unwrap_err();
        assert!(matches!(
            err,
            CalibError::DimensionMismatch {
                expected: 3,
                actual: 2
            }
        ));
    }

    #[test]
    fn sharpened_ten_class_fit_chooses_per_column_epsilons() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 10;
        let n = 600;
        let mut values = Vec::with_capacity(n * m);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let logits: Vec<f64> = (0..m).map(|_| rng.random_range(-2.5..2.5)).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let q: Vec<f64> = exps.iter().map(|&e| e / sum).collect();

            let pick: f64 = rng.random_range(0.0..1.0);
            let mut acc = 0.0;
            let mut label = m - 1;
            for (j, &p) in q.iter().enumerate() {
                acc += p;
                if pick < acc {
                    label = j;
                    break;
                }
            }
            labels.push(label);

            // Temperature sharpening pushes mass toward the endpoints.
            let sharp: Vec<f64> = q.iter().map(|&p| p.powi(3)).collect();
            let sharp_sum: f64 = sharp.iter().sum();
            values.extend(sharp.into_iter().map(|v| v / sharp_sum));
        }
        let probs = ProbabilityMatrix::from_row_major(n, m, values, None).unwrap();
        let labels = MulticlassLabels::new(labels, m).unwrap();
        let config = SplineConfig {
            max_knots: 30,
            lambda_grid: crate::ridge::log_spaced_grid(1e-3, 1e3, 7),
            compact_logit: CompactLogitMode::Auto,
            seed: 40,
            ..SplineConfig::default()
        };
        let cal = fit_multiclass(&probs, &labels, &BinaryFitMethod::Spline(config)).unwrap();
        assert_eq!(cal.n_classes(), m);
        let out = predict_multiclass(&cal, &probs).unwrap();
        for i in 0..n {
            let sum: f64 = out.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
