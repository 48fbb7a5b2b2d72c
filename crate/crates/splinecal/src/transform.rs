//! The compact logit transform and its epsilon-selection heuristic.
//!
//! `G_eps` rescales `[0, 1]` so that resolution near the endpoints is
//! expanded: on `[eps, 1-eps]` it is a logit curve scaled and shifted to fix
//! the points `eps`, `1/2`, and `1-eps`; outside that interval it is the
//! identity. Overconfident classifiers put their signal in the tails, and
//! calibrating `G_eps(score)` instead of the raw score lets a smooth curve
//! resolve it.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

/// Parameters of the compact logit transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactLogitParams {
    epsilon: f64,
}

impl CompactLogitParams {
    /// Requires `0 < epsilon < 0.5`; at `0.5` the piecewise definition
    /// degenerates.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(CalibError::InvalidOptions {
                reason: format!("epsilon must lie in (0, 0.5), got {epsilon}"),
            });
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Apply the compact logit to one score in `[0, 1]`.
pub fn compact_logit(x: f64, params: CompactLogitParams) -> Result<f64> {
    if !x.is_finite() || x < -1e-12 || x > 1.0 + 1e-12 {
        return Err(CalibError::DomainError { value: x });
    }
    let x = x.clamp(0.0, 1.0);
    let eps = params.epsilon;
    // Identity outside (eps, 1-eps); the seams themselves take the identity
    // branch so the fixed points G(eps) = eps and G(1-eps) = 1-eps are exact.
    if x <= eps || x >= 1.0 - eps {
        return Ok(x);
    }
    let scale = (1.0 - 2.0 * eps) / (2.0 * ((1.0 - eps) / eps).ln());
    let g = scale * (x / (1.0 - x)).ln() + 0.5;
    Ok(g.clamp(0.0, 1.0))
}

/// Element-wise compact logit.
pub fn compact_logit_vec(xs: &[f64], params: CompactLogitParams) -> Result<Vec<f64>> {
    xs.iter().map(|&x| compact_logit(x, params)).collect()
}

/// Pick epsilon as `10^(r-1)` with `r = floor(log10(min(1 - p_i)))`, the
/// minimum taken over scores strictly below 1. The result is clamped into
/// `(0, 0.49]` as a guard; the formula itself never exceeds 0.1.
pub fn choose_epsilon(scores: &[f64]) -> Result<CompactLogitParams> {
    if scores.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    let mut min_gap = f64::INFINITY;
    for &s in scores {
        if s < 1.0 {
            min_gap = min_gap.min(1.0 - s);
        }
    }
    if !min_gap.is_finite() {
        return Err(CalibError::AllScoresAreOne);
    }
    let r = min_gap.log10().floor();
    let epsilon = 10f64.powf(r - 1.0).min(0.49);
    CompactLogitParams::new(epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(eps: f64) -> CompactLogitParams {
        CompactLogitParams::new(eps).unwrap()
    }

    #[test]
    fn fixed_points_are_exact() {
        for eps in [0.1, 0.01, 0.0001] {
            let p = params(eps);
            for t in [0.0, eps, 0.5, 1.0 - eps, 1.0] {
                let g = compact_logit(t, p).unwrap();
                assert!(
                    (g - t).abs() <= 1e-12,
                    "G_{eps}({t}) = {g}, expected fixed point"
                );
            }
        }
    }

    #[test]
    fn matches_closed_form_oracle() {
        // eps = 0.01, x = 0.1: 0.98 / (2 ln 99) * ln(1/9) + 1/2,
        // evaluated independently at high precision.
        let g = compact_logit(0.1, params(0.01)).unwrap();
        assert!((g - 0.265699246590224849890596758541).abs() < 1e-15);
    }

    #[test]
    fn identity_branch_below_epsilon() {
        let g = compact_logit(0.005, params(0.01)).unwrap();
        assert_eq!(g, 0.005);
    }

    #[test]
    fn continuous_at_branch_seams() {
        // The identity side moves by exactly delta; the logit side moves by
        // at most G'(seam) * delta to first order, where
        // G'(x) = (1 - 2 eps) / (2 ln((1 - eps)/eps) x (1 - x)). A branch
        // discontinuity would show up as an O(eps) jump instead.
        for eps in [0.1, 0.01, 0.0001] {
            let p = params(eps);
            let delta = 1e-10;
            let slope = (1.0 - 2.0 * eps) / (2.0 * ((1.0 - eps) / eps).ln() * eps * (1.0 - eps));
            let logit_side_tol = (1.05 * slope * delta).max(1e-9);
            for seam in [eps, 1.0 - eps] {
                let below = compact_logit(seam - delta, p).unwrap();
                let above = compact_logit(seam + delta, p).unwrap();
                let (identity_gap, logit_gap) = if seam == eps {
                    ((below - seam).abs(), (above - seam).abs())
                } else {
                    ((above - seam).abs(), (below - seam).abs())
                };
                assert!(identity_gap < 1e-9, "identity side gap {identity_gap}");
                assert!(
                    logit_gap < logit_side_tol,
                    "logit side gap {logit_gap} vs {logit_side_tol} at eps={eps}"
                );
            }
        }
    }

    #[test]
    fn strictly_increasing_on_dense_grid() {
        for eps in [0.1, 0.01, 0.0001] {
            let p = params(eps);
            let mut prev = -1.0;
            for i in 0..=10_000 {
                let x = i as f64 / 10_000.0;
                let g = compact_logit(x, p).unwrap();
                assert!(g > prev, "not increasing at x={x} for eps={eps}");
                assert!((0.0..=1.0).contains(&g));
                prev = g;
            }
        }
    }

    #[test]
    fn symmetric_about_one_half() {
        let p = params(0.01);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let a = compact_logit(x, p).unwrap();
            let b = compact_logit(1.0 - x, p).unwrap();
            assert!((a - (1.0 - b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        let err = compact_logit(1.5, params(0.01)).unwrap_err();
        assert!(matches!(err, CalibError::DomainError { .. }));
    }

    #[test]
    fn epsilon_from_small_gap() {
        // min(1 - p) = 0.003 -> floor(log10) = -3 -> eps = 1e-4.
        let p = choose_epsilon(&[0.5, 0.997, 0.2]).unwrap();
        assert!((p.epsilon() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn epsilon_from_all_zero_scores() {
        // min(1 - p) = 1 -> r = 0 -> eps = 0.1.
        let p = choose_epsilon(&[0.0, 0.0]).unwrap();
        assert!((p.epsilon() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn all_ones_is_an_error() {
        let err = choose_epsilon(&[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, CalibError::AllScoresAreOne));
    }

    #[test]
    fn exact_ones_are_ignored_by_the_heuristic() {
        let with_ones = choose_epsilon(&[1.0, 0.97, 1.0]).unwrap();
        let without = choose_epsilon(&[0.97]).unwrap();
        assert_eq!(with_ones.epsilon(), without.epsilon());
    }

    #[test]
    fn vector_form_maps_fixed_points() {
        let p = params(0.01);
        let out = compact_logit_vec(&[0.01, 0.5, 0.99], p).unwrap();
        assert_eq!(out, vec![0.01, 0.5, 0.99]);
        assert!(compact_logit_vec(&[], p).unwrap().is_empty());
    }

    #[test]
    fn invalid_epsilon_is_rejected() {
        assert!(CompactLogitParams::new(0.5).is_err());
        assert!(CompactLogitParams::new(0.0).is_err());
        assert!(CompactLogitParams::new(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn outputs_stay_in_unit_interval(x in 0.0f64..=1.0, eps in 1e-6f64..0.49) {
            let g = compact_logit(x, params(eps)).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
        }
    }
}
