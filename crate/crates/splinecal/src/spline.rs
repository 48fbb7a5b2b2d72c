//! Knot selection and natural cubic spline basis expansion.
//!
//! The basis over knots `phi_1 < ... < phi_K` has one column per knot:
//! `N_1(x) = 1`, `N_2(x) = x`, and for `k = 1..K-2`
//! `N_{k+2}(x) = d_k(x) - d_{K-1}(x)` with
//! `d_k(x) = ((x - phi_k)_+^3 - (x - phi_K)_+^3) / (phi_K - phi_k)`.
//! Curves spanned by this basis are linear beyond the boundary knots.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::linalg::DesignMatrix;

/// How `select_knots` thins the distinct score values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnotStrategy {
    /// Evenly spaced order statistics. Deterministic regardless of seed.
    #[default]
    Quantile,
    /// Uniform sample without replacement, seeded.
    Random,
}

/// Sorted, distinct spline knots. At least 4 are required; with fewer the
/// nonlinear columns degenerate and the fit collapses to Platt-like behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSet {
    knots: Vec<f64>,
}

impl KnotSet {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        let set = Self { knots };
        set.check()?;
        Ok(set)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.knots.len() < 4 {
            return Err(CalibError::TooFewDistinctValues {
                distinct: self.knots.len(),
            });
        }
        for (row, &k) in self.knots.iter().enumerate() {
            if !k.is_finite() {
                return Err(CalibError::NonFiniteInput { row });
            }
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CalibError::InvalidOptions {
                reason: "knots must be strictly increasing".to_string(),
            });
        }
        Ok(())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Evaluate the full basis row `[N_1(x), ..., N_K(x)]` into `out`.
    pub(crate) fn basis_row(&self, x: f64, out: &mut [f64]) {
        let knots = &self.knots;
        let k = knots.len();
        debug_assert_eq!(out.len(), k);
        let last = knots[k - 1];
        let cube_plus = |v: f64| {
            let t = x - v;
            if t > 0.0 {
                t * t * t
            } else {
                0.0
            }
        };
        let tail = cube_plus(last);
        let d = |j: usize| (cube_plus(knots[j]) - tail) / (last - knots[j]);

        out[0] = 1.0;
        out[1] = x;
        let d_last = d(k - 2);
        for j in 0..k - 2 {
            out[j + 2] = d(j) - d_last;
        }
    }
}

/// Natural basis expansion of a score vector: `n x K`, one column per knot.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    values: DesignMatrix,
    knots: KnotSet,
}

impl BasisMatrix {
    pub fn values(&self) -> &DesignMatrix {
        &self.values
    }

    pub fn knots(&self) -> &KnotSet {
        &self.knots
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    /// The design for the penalized regression: every column except the
    /// constant `N_1`, which is replaced by the model's unpenalized intercept.
    pub fn penalized_design(&self) -> DesignMatrix {
        let rows = self.values.rows();
        let cols = self.values.cols() - 1;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend_from_slice(&self.values.row(i)[1..]);
        }
        DesignMatrix::from_row_major(rows, cols, data)
    }
}

/// Pick knots from the distinct values of `values`. The minimum and maximum
/// always become knots; when there are no more than `max_knots` distinct
/// values, all of them do.
pub fn select_knots(
    values: &[f64],
    max_knots: usize,
    seed: u64,
    strategy: KnotStrategy,
) -> Result<KnotSet> {
    if values.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    if max_knots < 4 {
        return Err(CalibError::InvalidOptions {
            reason: format!("max_knots must be at least 4, got {max_knots}"),
        });
    }
    for (row, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(CalibError::NonFiniteInput { row });
        }
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let d = distinct.len();
    if d < 4 {
        return Err(CalibError::TooFewDistinctValues { distinct: d });
    }
    if d <= max_knots {
        return KnotSet::new(distinct);
    }

    let knots = match strategy {
        KnotStrategy::Quantile => (0..max_knots)
            .map(|i| {
                let idx = (i as f64 * (d - 1) as f64 / (max_knots - 1) as f64).round() as usize;
                distinct[idx]
            })
            .collect::<Vec<_>>(),
        KnotStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked =
                rand::seq::index::sample(&mut rng, d - 2, max_knots - 2).into_vec();
            picked.sort_unstable();
            let mut knots = Vec::with_capacity(max_knots);
            knots.push(distinct[0]);
            knots.extend(picked.into_iter().map(|i| distinct[i + 1]));
            knots.push(distinct[d - 1]);
            knots
        }
    };
    KnotSet::new(knots)
}

/// Evaluate the natural basis at each value of `x`. Values outside the knot
/// range are allowed; the basis is defined on all reals and is linear there.
pub fn natural_basis(x: &[f64], knots: &KnotSet) -> Result<BasisMatrix> {
    let k = knots.len();
    let mut data = vec![0.0; x.len() * k];
    for (row, &xi) in x.iter().enumerate() {
        if !xi.is_finite() {
            return Err(CalibError::NonFiniteInput { row });
        }
        knots.basis_row(xi, &mut data[row * k..(row + 1) * k]);
    }
    Ok(BasisMatrix {
        values: DesignMatrix::from_row_major(x.len(), k, data),
        knots: knots.clone(),
    })
}
