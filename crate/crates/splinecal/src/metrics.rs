//! Evaluation: log-loss, Brier score, accuracy, and reliability-diagram data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledScores, MulticlassLabels, ProbabilityMatrix};
use crate::error::{CalibError, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the
/// losses. Shared with the regression solver so training and evaluation
/// losses agree.
pub(crate) const PROB_CLAMP: f64 = 1e-15;

fn check_dims(predicted: &ProbabilityMatrix, labels: &MulticlassLabels) -> Result<()> {
    if predicted.n_rows() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: predicted.n_rows(),
            actual: labels.len(),
        });
    }
    if predicted.n_classes() != labels.n_classes() {
        return Err(CalibError::DimensionMismatch {
            expected: predicted.n_classes(),
            actual: labels.n_classes(),
        });
    }
    Ok(())
}

/// Mean over rows of `-ln p[i, label_i]`, clamped.
pub fn log_loss(predicted: &ProbabilityMatrix, labels: &MulticlassLabels) -> Result<f64> {
    check_dims(predicted, labels)?;
    let total: f64 = labels
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = predicted.get(i, y).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -p.ln()
        })
        .sum();
    Ok(total / labels.len() as f64)
}

/// Binary log-loss on `(score, label)` pairs; equals the matrix path on
/// the two-column representation `[1 - s, s]`.
pub fn binary_log_loss(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    if scores.len() != labels.len() {
        return Err(CalibError::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let p = if y == 1 { s } else { 1.0 - s };
            -p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln()
        })
        .sum();
    Ok(total / scores.len() as f64)
}

/// Mean over rows of `sum_j (p_ij - I[label_i = j])^2`. This is the
/// full-vector sum convention; for binary problems it equals twice the
/// squared error on the positive class.
pub fn brier_score(predicted: &ProbabilityMatrix, labels: &MulticlassLabels) -> Result<f64> {
    check_dims(predicted, labels)?;
    let mut total = 0.0;
    for (i, &y) in labels.labels().iter().enumerate() {
        for (j, &p) in predicted.row(i).iter().enumerate() {
            let target = if j == y { 1.0 } else { 0.0 };
            total += (p - target) * (p - target);
        }
    }
    Ok(total / labels.len() as f64)
}

/// Fraction of rows where the argmax matches the label; argmax ties break
/// toward the lowest class index.
pub fn accuracy(predicted: &ProbabilityMatrix, labels: &MulticlassLabels) -> Result<f64> {
    check_dims(predicted, labels)?;
    let mut correct = 0usize;
    for (i, &y) in labels.labels().iter().enumerate() {
        let row = predicted.row(i);
        let mut best = 0usize;
        for (j, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = j;
            }
        }
        if best == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// One equal-width reliability bin. `mean_score` and `frac_pos` are absent
/// when the bin is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_score: Option<f64>,
    pub frac_pos: Option<f64>,
}

/// Reliability-diagram data: equal-width bins on `[0, 1]`, right edge
/// inclusive on the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    bins: Vec<ReliabilityBin>,
}

impl ReliabilityBins {
    pub fn bins(&self) -> &[ReliabilityBin] {
        &self.bins
    }

    /// CSV with the exact header `bin_lo,bin_hi,count,mean_score,frac_pos`;
    /// empty bins leave the mean and fraction cells blank.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,mean_score,frac_pos\n");
        for bin in &self.bins {
            let mean = bin.mean_score.map(|v| v.to_string()).unwrap_or_default();
            let frac = bin.frac_pos.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                bin.lo, bin.hi, bin.count, mean, frac
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Bin scores into `n_bins` equal-width bins and compare the mean predicted
/// score with the empirical positive fraction in each.
pub fn reliability_bins(data: &LabeledScores, n_bins: usize) -> Result<ReliabilityBins> {
    if n_bins < 1 {
        return Err(CalibError::InvalidOptions {
            reason: "n_bins must be at least 1".to_string(),
        });
    }
    let mut counts = vec![0usize; n_bins];
    let mut score_sums = vec![0.0; n_bins];
    let mut pos_counts = vec![0usize; n_bins];
    for (&s, &y) in data.scores().iter().zip(data.labels()) {
        let idx = ((s * n_bins as f64) as usize).min(n_bins - 1);
        counts[idx] += 1;
        score_sums[idx] += s;
        pos_counts[idx] += usize::from(y == 1);
    }
    let bins = (0..n_bins)
        .map(|i| {
            let count = counts[i];
            ReliabilityBin {
                lo: i as f64 / n_bins as f64,
                hi: (i + 1) as f64 / n_bins as f64,
                count,
                mean_score: (count > 0).then(|| score_sums[i] / count as f64),
                frac_pos: (count > 0).then(|| pos_counts[i] as f64 / count as f64),
            }
        })
        .collect();
    Ok(ReliabilityBins { bins })
}

/// Summary metrics for a prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub log_loss: f64,
    pub brier_score: f64,
    pub accuracy: f64,
    pub n_rows: usize,
}

pub fn evaluate(predicted: &ProbabilityMatrix, labels: &MulticlassLabels) -> Result<MetricsReport> {
    Ok(MetricsReport {
        log_loss: log_loss(predicted, labels)?,
        brier_score: brier_score(predicted, labels)?,
        accuracy: accuracy(predicted, labels)?,
        n_rows: labels.len(),
    })
}
