//! Temporal pooling of per-frame scores into one video score.
//!
//! The weighted pool gives full weight to frames scoring below 15, ramps the
//! weight linearly down to zero between 15 and 40, and ignores frames at or
//! above 40. Those extreme scores come mostly from flat or dark frames.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::exact_sum;
use crate::niqe::FrameScore;

/// Scores below this keep full weight.
pub const FULL_WEIGHT_BELOW: f64 = 15.0;
/// Scores at or above this get zero weight.
pub const ZERO_WEIGHT_FROM: f64 = 40.0;
/// Mean luma below this marks a dark frame (studio-swing black level).
pub const DARK_FRAME_LUMA: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingMethod {
    Weighted,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledScore {
    pub score: f64,
    pub method: PoolingMethod,
    /// Σ k_i for the weighted pool, N for the mean.
    pub total_weight: f64,
    pub frames_total: usize,
    pub frames_zero_weight: usize,
    /// Every weight was zero and the plain mean was reported instead.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDiagnostics {
    pub frame_index: usize,
    pub dark_frame: bool,
    pub outlier_score: bool,
    pub weight: f64,
}

/// Weight of a frame score: 1 on [0, 15), `-0.04·m + 1.6` on [15, 40), 0 beyond.
pub fn weight(m: f64) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::InvalidScore(m));
    }
    Ok(if m < FULL_WEIGHT_BELOW {
        1.0
    } else if m < ZERO_WEIGHT_FROM {
        // (40 - m) / 25 is the same line, exact at both knots.
        ((ZERO_WEIGHT_FROM - m) / (ZERO_WEIGHT_FROM - FULL_WEIGHT_BELOW)).clamp(0.0, 1.0)
    } else {
        0.0
    })
}

fn plain_mean(scores: &[f64]) -> f64 {
    exact_sum(scores.iter().copied()) / scores.len() as f64
}

/// `Σ m_i k_i / Σ k_i`, falling back to the plain mean when every weight is 0.
pub fn pool_weighted(scores: &[f64]) -> Result<PooledScore> {
    if scores.is_empty() {
        return Err(Error::EmptySeries);
    }
    let weights = scores.iter().map(|&m| weight(m)).collect::<Result<Vec<_>>>()?;
    let total_weight = exact_sum(weights.iter().copied());
    let frames_zero_weight = weights.iter().filter(|&&k| k == 0.0).count();
    if total_weight == 0.0 {
        return Ok(PooledScore {
            score: plain_mean(scores),
            method: PoolingMethod::Weighted,
            total_weight,
            frames_total: scores.len(),
            frames_zero_weight,
            fallback_used: true,
        });
    }
    let weighted = exact_sum(scores.iter().zip(&weights).map(|(m, k)| m * k));
    Ok(PooledScore {
        score: weighted / total_weight,
        method: PoolingMethod::Weighted,
        total_weight,
        frames_total: scores.len(),
        frames_zero_weight,
        fallback_used: false,
    })
}

pub fn pool_mean(scores: &[f64]) -> Result<PooledScore> {
    if scores.is_empty() {
        return Err(Error::EmptySeries);
    }
    if let Some(&bad) = scores.iter().find(|m| !m.is_finite()) {
        return Err(Error::InvalidScore(bad));
    }
    Ok(PooledScore {
        score: plain_mean(scores),
        method: PoolingMethod::Mean,
        total_weight: scores.len() as f64,
        frames_total: scores.len(),
        frames_zero_weight: 0,
        fallback_used: false,
    })
}

/// Per-frame dark/outlier flags and weights. Invalid scores get weight 0.
pub fn diagnose_frames(frames: &[FrameScore]) -> Vec<FrameDiagnostics> {
    frames
        .iter()
        .map(|f| FrameDiagnostics {
            frame_index: f.frame_index,
            dark_frame: f.mean_luma < DARK_FRAME_LUMA,
            outlier_score: f.score.is_nan() || f.score >= ZERO_WEIGHT_FROM,
            weight: weight(f.score).unwrap_or(0.0),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(score: f64, mean_luma: f64) -> FrameScore {
        FrameScore {
            frame_index: 0,
            score,
            patch_count: 1,
            mean_luma,
            degenerate_frame: false,
            covariance_fallback: false,
        }
    }

    #[test]
    fn weight_branches() {
        assert_eq!(weight(10.0).unwrap(), 1.0);
        assert_eq!(weight(40.0).unwrap(), 0.0);
        assert_eq!(weight(15.0).unwrap(), 1.0);
        assert!((weight(20.0).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(weight(0.0).unwrap(), 1.0);
        assert_eq!(weight(1e6).unwrap(), 0.0);
        assert!((weight(39.999).unwrap() - 0.00004).abs() < 1e-12);
    }

    #[test]
    fn weight_rejects_invalid() {
        assert_eq!(weight(-1.0), Err(Error::InvalidScore(-1.0)));
        assert!(weight(f64::NAN).is_err());
        assert!(weight(f64::INFINITY).is_err());
    }

    #[test]
    fn weighted_examples() {
        let p = pool_weighted(&[10.0, 10.0, 10.0]).unwrap();
        assert_eq!(p.score, 10.0);
        assert_eq!(p.total_weight, 3.0);

        let p = pool_weighted(&[10.0, 50.0]).unwrap();
        assert_eq!(p.score, 10.0);
        assert_eq!(p.frames_zero_weight, 1);
        assert!(!p.fallback_used);

        let p = pool_weighted(&[50.0, 60.0]).unwrap();
        assert_eq!(p.score, 55.0);
        assert!(p.fallback_used);
        assert_eq!(p.frames_zero_weight, 2);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(pool_mean(&[10.0, 50.0]).unwrap().score, 30.0);
        let p = pool_mean(&[7.0]).unwrap();
        assert_eq!(p.score, 7.0);
        assert_eq!(p.total_weight, 1.0);
        assert_eq!(pool_mean(&[]), Err(Error::EmptySeries));
        assert_eq!(pool_weighted(&[]), Err(Error::EmptySeries));
    }

    #[test]
    fn diagnostics_thresholds() {
        let d = diagnose_frames(&[frame(80.0, 5.0), frame(12.0, 120.0), frame(39.999, 100.0)]);
        assert!(d[0].dark_frame && d[0].outlier_score);
        assert_eq!(d[0].weight, 0.0);
        assert!(!d[1].dark_frame && !d[1].outlier_score);
        assert_eq!(d[1].weight, 1.0);
        assert!(!d[2].outlier_score);
        assert!((d[2].weight - 0.00004).abs() < 1e-12);
    }
}
