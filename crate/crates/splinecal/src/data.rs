//! Core value types for scores, labels, and probability matrices, plus CSV
//! ingestion and validation.
//!
//! File conventions (UTF-8 CSV with a header row):
//! - binary scores: columns `score,label`
//! - multiclass probabilities: columns `prob_<c0>,...,prob_<cK>[,label]`
//!
//! All types are immutable after construction and safe to share across
//! threads. Loading is single-threaded, deterministic, and order-preserving.

use std::fs::File;
use std::path::Path;

use crate::error::{CalibError, Result};

/// Tolerance for clamping values that sit just outside `[0, 1]` from float
/// round-off. Anything further out is rejected as a data bug.
const CLAMP_TOL: f64 = 1e-9;

/// Window of acceptable raw row sums before renormalization. Larger
/// deviations signal a data bug, not float drift.
const ROW_SUM_WINDOW: (f64, f64) = (0.99, 1.01);

fn clamp_unit(value: f64, row: usize) -> Result<f64> {
    if !value.is_finite() {
        return Err(CalibError::NonFiniteInput { row });
    }
    if value < -CLAMP_TOL || value > 1.0 + CLAMP_TOL {
        return Err(CalibError::ValueOutOfRange { row, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// A binary score vector paired with 0/1 outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledScores {
    /// Validate and construct. Scores within `1e-9` of `[0, 1]` are clamped;
    /// anything further out is rejected.
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        if scores.len() != labels.len() {
            return Err(CalibError::DimensionMismatch {
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        let mut clamped = Vec::with_capacity(scores.len());
        for (row, &s) in scores.iter().enumerate() {
            clamped.push(clamp_unit(s, row)?);
        }
        for (row, &l) in labels.iter().enumerate() {
            if l > 1 {
                return Err(CalibError::NonBinaryLabel {
                    row,
                    value: l.to_string(),
                });
            }
        }
        Ok(Self {
            scores: clamped,
            labels,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Fraction of rows labeled 1.
    pub fn positive_rate(&self) -> f64 {
        self.labels.iter().map(|&l| f64::from(l)).sum::<f64>() / self.len() as f64
    }
}

/// An `n x m` matrix of per-class probabilities; each row lies on the
/// probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_classes: usize,
    class_names: Vec<String>,
}

impl ProbabilityMatrix {
    /// Validate and construct from row-major values. Rows whose raw sum is
    /// within `[0.99, 1.01]` are renormalized to sum exactly 1; anything
    /// further out is rejected.
    pub fn from_row_major(
        n_rows: usize,
        n_classes: usize,
        mut values: Vec<f64>,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_rows == 0 {
            return Err(CalibError::EmptyInput);
        }
        if n_classes < 2 {
            return Err(CalibError::DimensionMismatch {
                expected: 2,
                actual: n_classes,
            });
        }
        if values.len() != n_rows * n_classes {
            return Err(CalibError::DimensionMismatch {
                expected: n_rows * n_classes,
                actual: values.len(),
            });
        }
        for row in 0..n_rows {
            let cells = &mut values[row * n_classes..(row + 1) * n_classes];
            let mut sum = 0.0;
            for v in cells.iter_mut() {
                *v = clamp_unit(*v, row)?;
                sum += *v;
            }
            if sum < ROW_SUM_WINDOW.0 || sum > ROW_SUM_WINDOW.1 {
                return Err(CalibError::RowSumOutOfRange { row, sum });
            }
            for v in cells.iter_mut() {
                *v /= sum;
            }
        }
        let class_names = match class_names {
            Some(names) => {
                if names.len() != n_classes {
                    return Err(CalibError::DimensionMismatch {
                        expected: n_classes,
                        actual: names.len(),
                    });
                }
                names
            }
            None => (0..n_classes).map(|c| c.to_string()).collect(),
        };
        Ok(Self {
            values,
            n_rows,
            n_classes,
            class_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_classes + j]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// The same values under new class names.
    pub fn rename_classes(&self, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() != self.n_classes {
            return Err(CalibError::DimensionMismatch {
                expected: self.n_classes,
                actual: class_names.len(),
            });
        }
        Ok(Self {
            values: self.values.clone(),
            n_rows: self.n_rows,
            n_classes: self.n_classes,
            class_names,
        })
    }
}

/// Zero-based class labels paired with a class count.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassLabels {
    labels: Vec<usize>,
    n_classes: usize,
}

impl MulticlassLabels {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        for (row, &l) in labels.iter().enumerate() {
            if l >= n_classes {
                return Err(CalibError::InvalidClassLabel {
                    row,
                    value: l.to_string(),
                });
            }
        }
        Ok(Self { labels, n_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// One-vs-rest indicator vector for `class`.
    pub fn indicator(&self, class: usize) -> Vec<u8> {
        self.labels
            .iter()
            .map(|&l| u8::from(l == class))
            .collect()
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CalibError::FileNotFound {
                path: path.to_path_buf(),
            }
        } else {
            CalibError::Io(e)
        }
    })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CalibError::MissingColumn {
            column: name.to_string(),
        })
}

fn parse_number(cell: &str, row: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| CalibError::NonFiniteInput { row })
}

/// Load a binary `score,label` CSV (column names are configurable).
pub fn load_labeled_scores(
    path: impl AsRef<Path>,
    score_column: &str,
    label_column: &str,
) -> Result<LabeledScores> {
    let mut reader = open_csv(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let score_idx = column_index(&headers, score_column)?;
    let label_idx = column_index(&headers, label_column)?;

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let score = parse_number(&record[score_idx], row)?;
        scores.push(clamp_unit(score, row)?);
        let raw = record[label_idx].trim();
        let value = raw
            .parse::<f64>()
            .map_err(|_| CalibError::NonBinaryLabel {
                row,
                value: raw.to_string(),
            })?;
        if value == 0.0 {
            labels.push(0);
        } else if value == 1.0 {
            labels.push(1);
        } else {
            return Err(CalibError::NonBinaryLabel {
                row,
                value: raw.to_string(),
            });
        }
    }
    LabeledScores::new(scores, labels)
}

/// Load a single score column (no labels), for applying a fitted calibrator.
pub fn load_scores(path: impl AsRef<Path>, score_column: &str) -> Result<Vec<f64>> {
    let mut reader = open_csv(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let score_idx = column_index(&headers, score_column)?;
    let mut scores = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        scores.push(clamp_unit(parse_number(&record[score_idx], row)?, row)?);
    }
    if scores.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    Ok(scores)
}

/// Load a multiclass probability CSV. Probability columns are those named
/// `prob_<class>`, taken in header order; `label_column`, when given, may
/// hold zero-based class indices or class-name strings matching the headers.
pub fn load_probability_matrix(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
) -> Result<(ProbabilityMatrix, Option<MulticlassLabels>)> {
    let mut reader = open_csv(path.as_ref())?;
    let headers = reader.headers()?.clone();

    let mut prob_cols = Vec::new();
    let mut class_names = Vec::new();
    for (idx, header) in headers.iter().enumerate() {
        if let Some(name) = header.trim().strip_prefix("prob_") {
            prob_cols.push(idx);
            class_names.push(name.to_string());
        }
    }
    if prob_cols.len() < 2 {
        return Err(CalibError::MissingColumn {
            column: "prob_<class> (at least two)".to_string(),
        });
    }
    let label_idx = match label_column {
        Some(name) => Some(column_index(&headers, name)?),
        None => None,
    };

    let n_classes = prob_cols.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for &idx in &prob_cols {
            values.push(parse_number(&record[idx], row)?);
        }
        if let Some(idx) = label_idx {
            let raw = record[idx].trim();
            let class = match class_names.iter().position(|n| n == raw) {
                Some(c) => c,
                None => {
                    let parsed =
                        raw.parse::<usize>()
                            .map_err(|_| CalibError::InvalidClassLabel {
                                row,
                                value: raw.to_string(),
                            })?;
                    if parsed >= n_classes {
                        return Err(CalibError::InvalidClassLabel {
                            row,
                            value: raw.to_string(),
                        });
                    }
                    parsed
                }
            };
            labels.push(class);
        }
        n_rows += 1;
    }
    let matrix = ProbabilityMatrix::from_row_major(n_rows, n_classes, values, Some(class_names))?;
    let labels = match label_idx {
        Some(_) => Some(MulticlassLabels::new(labels, n_classes)?),
        None => None,
    };
    Ok((matrix, labels))
}

/// Write a probability matrix (and optional labels) with `prob_<class>`
/// headers, full precision.
pub fn write_probability_matrix(
    path: impl AsRef<Path>,
    matrix: &ProbabilityMatrix,
    labels: Option<&MulticlassLabels>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != matrix.n_rows() {
            return Err(CalibError::DimensionMismatch {
                expected: matrix.n_rows(),
                actual: l.len(),
            });
        }
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = matrix
        .class_names()
        .iter()
        .map(|n| format!("prob_{n}"))
        .collect();
    if labels.is_some() {
        header.push("label".to_string());
    }
    writer.write_record(&header)?;
    for i in 0..matrix.n_rows() {
        let mut record: Vec<String> = matrix.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            record.push(l.labels()[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a `score[,label]` CSV, full precision.
pub fn write_scores(
    path: impl AsRef<Path>,
    scores: &[f64],
    labels: Option<&[u8]>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != scores.len() {
            return Err(CalibError::DimensionMismatch {
                expected: scores.len(),
                actual: l.len(),
            });
        }
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    if labels.is_some() {
        writer.write_record(["score", "label"])?;
    } else {
        writer.write_record(["score"])?;
    }
    for (i, s) in scores.iter().enumerate() {
        match labels {
            Some(l) => writer.write_record([s.to_string(), l[i].to_string()])?,
            None => writer.write_record([s.to_string()])?,
        }
    }
    writer.flush()?;
    Ok(())
}
