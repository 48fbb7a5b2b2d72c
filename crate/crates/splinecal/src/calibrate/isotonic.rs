//! Isotonic regression calibration: the pool-adjacent-violators solution,
//! predicted as a step function with boundaries at midpoints between the
//! scores that define adjacent blocks and flat extension beyond the data.

use serde::{Deserialize, Serialize};

use crate::data::LabeledScores;
use crate::error::{CalibError, Result};

/// Piecewise-constant nondecreasing calibration map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicCalibrator {
    /// Step locations between adjacent blocks; one fewer than the blocks.
    boundaries: Vec<f64>,
    /// Fitted probability of each block, nondecreasing.
    block_values: Vec<f64>,
}

impl IsotonicCalibrator {
    #[cfg(test)]
    pub(crate) fn from_blocks(boundaries: Vec<f64>, block_values: Vec<f64>) -> Self {
        Self {
            boundaries,
            block_values,
        }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn block_values(&self) -> &[f64] {
        &self.block_values
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.block_values.is_empty()
            || self.boundaries.len() + 1 != self.block_values.len()
            || self.block_values.windows(2).any(|w| w[0] > w[1])
            || self.boundaries.windows(2).any(|w| w[0] >= w[1])
            || self.block_values.iter().any(|&v| !(0.0..=1.0).contains(&v))
        {
            return Err(CalibError::CorruptFile {
                reason: "inconsistent isotonic blocks".to_string(),
            });
        }
        Ok(())
    }

    pub fn predict_one(&self, score: f64) -> f64 {
        let idx = self.boundaries.partition_point(|&b| b <= score);
        self.block_values[idx]
    }

    pub fn predict(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.predict_one(s)).collect()
    }
}

/// Fit by pool-adjacent-violators. Exactly tied scores are pooled first so
/// the fitted map is a function of the score.
pub fn fit_isotonic(data: &LabeledScores) -> Result<IsotonicCalibrator> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.scores()[a].partial_cmp(&data.scores()[b]).unwrap());

    // Pool exact ties into weighted points.
    let mut points: Vec<(f64, f64, f64)> = Vec::new(); // (score, label sum, weight)
    for &i in &order {
        let s = data.scores()[i];
        let y = f64::from(data.labels()[i]);
        match points.last_mut() {
            Some(last) if last.0 == s => {
                last.1 += y;
                last.2 += 1.0;
            }
            _ => points.push((s, y, 1.0)),
        }
    }

    // PAVA over the pooled points. Each block tracks its value, weight, and
    // the range of score positions it covers.
    struct Block {
        sum: f64,
        weight: f64,
        first_score: f64,
        last_score: f64,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for &(s, y_sum, w) in &points {
        blocks.push(Block {
            sum: y_sum,
            weight: w,
            first_score: s,
            last_score: s,
        });
        while blocks.len() >= 2 {
            let mean_last = blocks[blocks.len() - 1].sum / blocks[blocks.len() - 1].weight;
            let mean_prev = blocks[blocks.len() - 2].sum / blocks[blocks.len() - 2].weight;
            if mean_prev > mean_last {
                let top = blocks.pop().unwrap();
                let prev = blocks.last_mut().unwrap();
                prev.sum += top.sum;
                prev.weight += top.weight;
                prev.last_score = top.last_score;
            } else {
                break;
            }
        }
    }

    let block_values: Vec<f64> = blocks.iter().map(|b| b.sum / b.weight).collect();
    let boundaries: Vec<f64> = blocks
        .windows(2)
        .map(|pair| 0.5 * (pair[0].last_score + pair[1].first_score))
        .collect();
    Ok(IsotonicCalibrator {
        boundaries,
        block_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pools_the_violating_pair() {
        // Hand-run: [1, 0, 1] ordered by score pools to [0.5, 0.5, 1.0].
        let data = LabeledScores::new(vec![0.1, 0.2, 0.3], vec![1, 0, 1]).unwrap();
        let cal = fit_isotonic(&data).unwrap();
        assert_eq!(cal.predict(&[0.1, 0.2, 0.3]), vec![0.5, 0.5, 1.0]);
        assert_eq!(cal.block_values(), &[0.5, 1.0]);
        assert_eq!(cal.boundaries(), &[0.25]);
    }

    #[test]
    fn nondecreasing_labels_are_reproduced() {
        let data =
            LabeledScores::new(vec![0.1, 0.3, 0.5, 0.9], vec![0, 0, 1, 1]).unwrap();
        let cal = fit_isotonic(&data).unwrap();
        assert_eq!(cal.predict(&[0.1, 0.3, 0.5, 0.9]), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn single_point_is_a_constant_function() {
        let data = LabeledScores::new(vec![0.4], vec![1]).unwrap();
        let cal = fit_isotonic(&data).unwrap();
        assert_eq!(cal.predict(&[0.0, 0.4, 1.0]), vec![1.0, 1.0, 1.0]);
        assert!(cal.boundaries().is_empty());
    }

    #[test]
    fn tied_scores_are_pooled_before_fitting() {
        let data = LabeledScores::new(vec![0.5, 0.5, 0.9], vec![0, 1, 1]).unwrap();
        let cal = fit_isotonic(&data).unwrap();
        assert_eq!(cal.predict_one(0.5), 0.5);
        assert_eq!(cal.predict_one(0.9), 1.0);
    }

    #[test]
    fn extends_flat_beyond_the_data_range() {
        let data = LabeledScores::new(vec![0.4, 0.6], vec![0, 1]).unwrap();
        let cal = fit_isotonic(&data).unwrap();
        assert_eq!(cal.predict_one(0.0), 0.0);
        assert_eq!(cal.predict_one(1.0), 1.0);
    }

    proptest! {
        #[test]
        fn fitted_map_is_monotone(
            scores in proptest::collection::vec(0.0f64..=1.0, 1..60),
            seed in 0u64..1000,
        ) {
            let labels: Vec<u8> = scores
                .iter()
                .enumerate()
                .map(|(i, _)| u8::from((seed.wrapping_mul(31).wrapping_add(i as u64 * 17)) % 3 == 0))
                .collect();
            let data = LabeledScores::new(scores, labels).unwrap();
            let cal = fit_isotonic(&data).unwrap();
            prop_assert!(cal.block_values().windows(2).all(|w| w[0] <= w[1]));
            let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
            let preds = cal.predict(&grid);
            prop_assert!(preds.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(preds.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
