//! Spline calibration: knots from the (optionally transformed) scores, a
//! natural basis expansion, and a penalized logistic fit with the penalty
//! strength chosen by cross-validation.

use serde::{Deserialize, Serialize};

use crate::data::LabeledScores;
use crate::error::{CalibError, Result};
use crate::ridge::{
    default_lambda_grid, fit_ridge_logistic, select_lambda_cv, sigmoid, LambdaSearchReport,
    RidgeLogisticModel,
};
use crate::spline::{natural_basis, select_knots, KnotSet, KnotStrategy};
use crate::transform::{choose_epsilon, compact_logit, CompactLogitParams};
use crate::DEFAULT_SEED;

/// Scores closer than this to 0 or 1 (exact endpoints excluded) switch the
/// `Auto` transform mode on: the signal is crowding the endpoints.
const AUTO_CROWDING_THRESHOLD: f64 = 0.01;

/// Whether to pass scores through the compact logit before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompactLogitMode {
    /// Enable when any score (other than exact 0/1) is within `0.01` of an
    /// endpoint — the overconfident regime.
    #[default]
    Auto,
    On,
    Off,
}

/// Options for [`fit_spline_binary`].
#[derive(Debug, Clone)]
pub struct SplineConfig {
    pub max_knots: usize,
    pub knot_strategy: KnotStrategy,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub compact_logit: CompactLogitMode,
    /// Overrides the epsilon heuristic when the transform is active.
    pub epsilon_override: Option<f64>,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self {
            max_knots: 200,
            knot_strategy: KnotStrategy::Quantile,
            lambda_grid: default_lambda_grid(),
            folds: 5,
            seed: DEFAULT_SEED,
            compact_logit: CompactLogitMode::Auto,
            epsilon_override: None,
        }
    }
}

/// A fitted spline calibrator: prediction runs transform (if any), then the
/// natural basis expansion over the stored knots, then the logistic link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineCalibrator {
    knots: KnotSet,
    model: RidgeLogisticModel,
    transform: Option<CompactLogitParams>,
    lambda_report: LambdaSearchReport,
}

impl SplineCalibrator {
    pub fn knots(&self) -> &KnotSet {
        &self.knots
    }

    pub fn model(&self) -> &RidgeLogisticModel {
        &self.model
    }

    pub fn transform(&self) -> Option<CompactLogitParams> {
        self.transform
    }

    pub fn lambda_report(&self) -> &LambdaSearchReport {
        &self.lambda_report
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        knots: KnotSet,
        model: RidgeLogisticModel,
        transform: Option<CompactLogitParams>,
        lambda_report: LambdaSearchReport,
    ) -> Self {
        Self {
            knots,
            model,
            transform,
            lambda_report,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.knots.check().map_err(|e| CalibError::CorruptFile {
            reason: e.to_string(),
        })?;
        if self.model.coefficients().len() != self.knots.len() - 1 {
            return Err(CalibError::CorruptFile {
                reason: format!(
                    "{} coefficients do not match {} knots",
                    self.model.coefficients().len(),
                    self.knots.len()
                ),
            });
        }
        Ok(())
    }

    /// Calibrated probability for one score in `[0, 1]`.
    pub fn predict_one(&self, score: f64) -> Result<f64> {
        let z = match self.transform {
            Some(params) => compact_logit(score, params)?,
            None => {
                if !score.is_finite() || score < -1e-12 || score > 1.0 + 1e-12 {
                    return Err(CalibError::DomainError { value: score });
                }
                score.clamp(0.0, 1.0)
            }
        };
        let mut row = vec![0.0; self.knots.len()];
        self.knots.basis_row(z, &mut row);
        let lin = self.model.intercept()
            + self
                .model
                .coefficients()
                .iter()
                .zip(&row[1..])
                .map(|(c, x)| c * x)
                .sum::<f64>();
        Ok(sigmoid(lin))
    }

    /// Element-wise calibration; outputs lie strictly in `(0, 1)`.
    pub fn predict(&self, scores: &[f64]) -> Result<Vec<f64>> {
        scores.iter().map(|&s| self.predict_one(s)).collect()
    }
}

fn resolve_transform(
    scores: &[f64],
    config: &SplineConfig,
) -> Result<Option<CompactLogitParams>> {
    let enabled = match config.compact_logit {
        CompactLogitMode::On => true,
        CompactLogitMode::Off => false,
        CompactLogitMode::Auto => scores
            .iter()
            .filter(|&&s| s > 0.0 && s < 1.0)
            .map(|&s| s.min(1.0 - s))
            .fold(f64::INFINITY, f64::min)
            < AUTO_CROWDING_THRESHOLD,
    };
    if !enabled {
        return Ok(None);
    }
    let params = match config.epsilon_override {
        Some(eps) => CompactLogitParams::new(eps)?,
        None => choose_epsilon(scores)?,
    };
    Ok(Some(params))
}

/// Fit a binary spline calibrator: select knots from the (possibly
/// transformed) scores, expand the natural basis, pick the penalty by
/// cross-validated log-loss, and refit on all calibration data.
pub fn fit_spline_binary(data: &LabeledScores, config: &SplineConfig) -> Result<SplineCalibrator> {
    let labels = data.labels();
    if labels.iter().all(|&l| l == 1) || labels.iter().all(|&l| l == 0) {
        return Err(CalibError::SingleClassData);
    }

    let transform = resolve_transform(data.scores(), config)?;
    let z: Vec<f64> = match transform {
        Some(params) => data
            .scores()
            .iter()
            .map(|&s| compact_logit(s, params))
            .collect::<Result<_>>()?,
        None => data.scores().to_vec(),
    };

    let knots = select_knots(&z, config.max_knots, config.seed, config.knot_strategy)?;
    let basis = natural_basis(&z, &knots)?;
    let design = basis.penalized_design();
    let lambda_report = select_lambda_cv(
        &design,
        labels,
        &config.lambda_grid,
        config.folds,
        config.seed,
    )?;
    let model = fit_ridge_logistic(&design, labels, lambda_report.chosen)?;
    Ok(SplineCalibrator {
        knots,
        model,
        transform,
        lambda_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::binary_log_loss;
    use crate::ridge::logit;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn test_config(seed: u64) -> SplineConfig {
        SplineConfig {
            max_knots: 50,
            lambda_grid: crate::ridge::log_spaced_grid(1e-4, 1e4, 10),
            seed,
            ..SplineConfig::default()
        }
    }

    fn bernoulli_from_own_scores(n: usize, seed: u64) -> LabeledScores {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s: f64 = rng.random_range(0.0..1.0);
            scores.push(s);
            labels.push(u8::from(rng.random_range(0.0..1.0) < s));
        }
        LabeledScores::new(scores, labels).unwrap()
    }

    #[test]
    fn well_calibrated_input_maps_near_identity() {
        let data = bernoulli_from_own_scores(5000, 404);
        let cal = fit_spline_binary(&data, &test_config(1)).unwrap();
        let grid: Vec<f64> = (5..=95).map(|i| i as f64 / 100.0).collect();
        let preds = cal.predict(&grid).unwrap();
        let mean_dev: f64 = grid
            .iter()
            .zip(&preds)
            .map(|(s, p)| (s - p).abs())
            .sum::<f64>()
            / grid.len() as f64;
        assert!(mean_dev < 0.03, "mean |f(s) - s| = {mean_dev}");
        let mid = cal.predict_one(0.5).unwrap();
        assert!((mid - 0.5).abs() < 0.03, "f(0.5) = {mid}");
    }

    #[test]
    fn auto_mode_follows_the_crowding_rule() {
        let mut scores: Vec<f64> = (0..100).map(|i| 0.02 + 0.96 * i as f64 / 99.0).collect();
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 2 == 0)).collect();
        let data = LabeledScores::new(scores.clone(), labels.clone()).unwrap();
        let cal = fit_spline_binary(&data, &test_config(2)).unwrap();
        assert!(cal.transform().is_none(), "no crowding, expected no transform");

        scores[0] = 0.9999;
        let data = LabeledScores::new(scores, labels).unwrap();
        let cal = fit_spline_binary(&data, &test_config(2)).unwrap();
        assert!(cal.transform().is_some(), "crowded scores, expected transform");
    }

    #[test]
    fn single_class_is_rejected() {
        let data = LabeledScores::new(vec![0.1, 0.5, 0.7, 0.9], vec![1, 1, 1, 1]).unwrap();
        let err = fit_spline_binary(&data, &test_config(3)).unwrap_err();
        assert!(matches!(err, CalibError::SingleClassData));
    }

    #[test]
    fn too_few_distinct_scores_is_rejected() {
        let data =
            LabeledScores::new(vec![0.2, 0.2, 0.8, 0.8], vec![0, 0, 1, 1]).unwrap();
        let err = fit_spline_binary(&data, &test_config(4)).unwrap_err();
        assert!(matches!(err, CalibError::TooFewDistinctValues { distinct: 2 }));
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let knots = KnotSet::new(vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        let model = RidgeLogisticModel::from_parts(0.0, vec![0.0; 3], 1.0);
        let report = LambdaSearchReport {
            grid: vec![1.0],
            cv_losses: vec![0.0],
            chosen: 1.0,
            fold_count: 2,
            seed: 0,
        };
        let cal = SplineCalibrator::from_parts(knots, model, None, report);
        assert_eq!(cal.predict_one(0.123).unwrap(), 0.5);
        assert!(cal.predict(&[]).unwrap().is_empty());
    }

    #[test]
    fn out_of_domain_score_is_rejected() {
        let data = bernoulli_from_own_scores(200, 5);
        let cal = fit_spline_binary(&data, &test_config(5)).unwrap();
        assert!(matches!(
            cal.predict_one(1.5).unwrap_err(),
            CalibError::DomainError { .. }
        ));
    }

    #[test]
    fn transform_composition_is_exact() {
        // Fitting on transformed scores and composing with the transform by
        // hand must equal the packaged prediction bit for bit.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 1200;
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let p: f64 = rng.random_range(0.0..1.0);
            let sharp = p.powi(4) / (p.powi(4) + (1.0 - p).powi(4));
            scores.push(sharp);
            labels.push(u8::from(rng.random_range(0.0..1.0) < p));
        }
        let data = LabeledScores::new(scores, labels).unwrap();
        let mut config = test_config(7);
        config.compact_logit = CompactLogitMode::On;
        let cal = fit_spline_binary(&data, &config).unwrap();
        let params = cal.transform().unwrap();

        let untransformed = SplineCalibrator::from_parts(
            cal.knots().clone(),
            cal.model().clone(),
            None,
            cal.lambda_report().clone(),
        );
        for s in [0.0, 0.001, 0.25, 0.5, 0.93, 0.99999, 1.0] {
            let direct = cal.predict_one(s).unwrap();
            let composed = untransformed
                .predict_one(compact_logit(s, params).unwrap())
                .unwrap();
            assert_eq!(direct, composed, "composition differs at {s}");
        }
    }

    #[test]
    fn beats_the_base_rate_predictor_on_fit_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 2000;
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s: f64 = rng.random_range(0.0..1.0);
            let p = sigmoid(logit(s.clamp(1e-9, 1.0 - 1e-9)) * 0.5);
            scores.push(s);
            labels.push(u8::from(rng.random_range(0.0..1.0) < p));
        }
        let data = LabeledScores::new(scores, labels).unwrap();
        let cal = fit_spline_binary(&data, &test_config(9)).unwrap();
        let calibrated = cal.predict(data.scores()).unwrap();
        let fit_loss = binary_log_loss(&calibrated, data.labels()).unwrap();
        let base = data.positive_rate();
        let base_loss =
            binary_log_loss(&vec![base; data.len()], data.labels()).unwrap();
        assert!(fit_loss <= base_loss + 1e-9, "{fit_loss} vs base {base_loss}");
    }

    #[test]
    fn same_seed_gives_identical_calibrators() {
        let data = bernoulli_from_own_scores(800, 10);
        let a = fit_spline_binary(&data, &test_config(11)).unwrap();
        let b = fit_spline_binary(&data, &test_config(11)).unwrap();
        assert_eq!(a, b);
        let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        assert_eq!(a.predict(&grid).unwrap(), b.predict(&grid).unwrap());
    }

    #[test]
    fn epsilon_override_is_used() {
        let data = bernoulli_from_own_scores(600, 12);
        let mut config = test_config(13);
        config.compact_logit = CompactLogitMode::On;
        config.epsilon_override = Some(0.05);
        let cal = fit_spline_binary(&data, &config).unwrap();
        assert_eq!(cal.transform().unwrap().epsilon(), 0.05);
    }

    #[test]
    fn outputs_stay_strictly_inside_unit_interval() {
        let data = bernoulli_from_own_scores(1000, 14);
        let cal = fit_spline_binary(&data, &test_config(15)).unwrap();
        for s in [0.0, 1e-9, 0.5, 1.0 - 1e-9, 1.0] {
            let p = cal.predict_one(s).unwrap();
            assert!(p > 0.0 && p < 1.0, "prediction {p} at {s}");
        }
    }
}
