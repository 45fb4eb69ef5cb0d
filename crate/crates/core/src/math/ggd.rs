//! Moment-matching estimators for the generalized Gaussian (GGD) and
//! asymmetric generalized Gaussian (AGGD) families.
//!
//! Both estimators pick the shape exponent from a fixed grid by matching a
//! sample moment ratio against the closed-form ratio function
//! `r(a) = Γ(2/a)² / (Γ(1/a) Γ(3/a))`, which increases monotonically from 0
//! towards 3/4 as `a` grows.

use alloc::boxed::Box;
use alloc::vec::Vec;
use once_cell::race::OnceBox;

use super::gamma::gamma;
use crate::error::{Error, Result};

pub const ALPHA_MIN: f64 = 0.2;
pub const ALPHA_MAX: f64 = 10.0;
/// Grid points from `ALPHA_MIN` to `ALPHA_MAX` inclusive at a 1e-3 step.
pub const ALPHA_GRID_LEN: usize = 9801;

const MIN_SAMPLES: usize = 100;

/// Generalized Gaussian parameters. `sigma` is the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub alpha: f64,
    pub sigma: f64,
}

/// Asymmetric generalized Gaussian parameters.
///
/// `sigma_left` and `sigma_right` are the one-sided root mean squares, so a
/// symmetric distribution has `sigma_left == sigma_right` and `mean == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdParams {
    pub alpha: f64,
    pub mean: f64,
    pub sigma_left: f64,
    pub sigma_right: f64,
}

/// `Γ(2/a)² / (Γ(1/a) Γ(3/a))`.
pub fn ggd_ratio(alpha: f64) -> f64 {
    let g2 = gamma(2.0 / alpha);
    g2 * g2 / (gamma(1.0 / alpha) * gamma(3.0 / alpha))
}

struct RatioTable {
    alphas: Vec<f64>,
    ratios: Vec<f64>,
}

impl RatioTable {
    fn build() -> Self {
        let alphas: Vec<f64> = (0..ALPHA_GRID_LEN).map(|i| (200 + i) as f64 / 1000.0).collect();
        let ratios = alphas.iter().map(|&a| ggd_ratio(a)).collect();
        RatioTable { alphas, ratios }
    }

    /// Grid alpha whose ratio is nearest to `target`.
    fn nearest(&self, target: f64) -> f64 {
        let idx = self.ratios.partition_point(|&r| r < target);
        let best = if idx == 0 {
            0
        } else if idx == self.ratios.len() {
            idx - 1
        } else if (self.ratios[idx] - target).abs() < (target - self.ratios[idx - 1]).abs() {
            idx
        } else {
            idx - 1
        };
        self.alphas[best]
    }
}

fn ratio_table() -> &'static RatioTable {
    static TABLE: OnceBox<RatioTable> = OnceBox::new();
    TABLE.get_or_init(|| Box::new(RatioTable::build()))
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::DegenerateInput("fewer than 100 samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("non-finite sample"));
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(Error::DegenerateInput("zero variance"));
    }
    Ok(())
}

/// Fit a zero-centred GGD by matching `(E|x|)² / E[x²]` against the ratio grid.
pub fn fit_ggd(samples: &[f64]) -> Result<GgdParams> {
    check_samples(samples)?;
    let n = samples.len() as f64;
    let (abs_sum, sq_sum) = samples.iter().fold((0.0, 0.0), |(a, s), &x| (a + x.abs(), s + x * x));
    let mean_abs = abs_sum / n;
    let mean_sq = sq_sum / n;
    let alpha = ratio_table().nearest(mean_abs * mean_abs / mean_sq);
    Ok(GgdParams { alpha, sigma: libm::sqrt(mean_sq) })
}

/// Fit an AGGD from one-sided second moments and a skew-corrected ratio.
pub fn fit_aggd(samples: &[f64]) -> Result<AggdParams> {
    check_samples(samples)?;
    let (mut left_sq, mut left_n) = (0.0, 0usize);
    let (mut right_sq, mut right_n) = (0.0, 0usize);
    let mut abs_sum = 0.0;
    for &x in samples {
        abs_sum += x.abs();
        if x < 0.0 {
            left_sq += x * x;
            left_n += 1;
        } else if x > 0.0 {
            right_sq += x * x;
            right_n += 1;
        }
    }
    if left_n == 0 {
        return Err(Error::DegenerateInput("no negative samples"));
    }
    if right_n == 0 {
        return Err(Error::DegenerateInput("no positive samples"));
    }
    let n = samples.len() as f64;
    let sigma_left = libm::sqrt(left_sq / left_n as f64);
    let sigma_right = libm::sqrt(right_sq / right_n as f64);
    let mean_abs = abs_sum / n;
    let mean_sq = (left_sq + right_sq) / n;

    let g = sigma_left / sigma_right;
    let r_hat = mean_abs * mean_abs / mean_sq;
    let r_norm = r_hat * (g * g * g + 1.0) * (g + 1.0) / ((g * g + 1.0) * (g * g + 1.0));
    let alpha = ratio_table().nearest(r_norm);

    // One-sided scale parameters are sigma * sqrt(Γ(1/a)/Γ(3/a)).
    let g1 = gamma(1.0 / alpha);
    let scale = libm::sqrt(g1 / gamma(3.0 / alpha));
    let mean = (sigma_right - sigma_left) * scale * gamma(2.0 / alpha) / g1;
    Ok(AggdParams { alpha, mean, sigma_left, sigma_right })
}
