use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Multivariate Gaussian with a dense row-major covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MvgModel {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    sample_count: usize,
}

const SYMMETRY_TOLERANCE: f64 = 1e-9;

impl MvgModel {
    /// Builds a model from parts, checking shape, finiteness and symmetry.
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>, sample_count: usize) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("empty mean vector"));
        }
        if covariance.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: covariance.len() });
        }
        if mean.iter().chain(&covariance).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model entry"));
        }
        let scale = covariance.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (covariance[i * dim + j], covariance[j * dim + i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::InvalidParameter("covariance is not symmetric"));
                }
            }
        }
        Ok(MvgModel { mean, covariance, sample_count })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `dim × dim` covariance.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    pub fn covariance_at(&self, row: usize, col: usize) -> f64 {
        self.covariance[row * self.dim() + col]
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.covariance_at(i, i)).sum()
    }

    /// Same covariance, different mean. Used when a frame has too few
    /// patches to estimate its own covariance.
    pub fn with_mean(&self, mean: Vec<f64>, sample_count: usize) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: mean.len() });
        }
        MvgModel::new(mean, self.covariance.clone(), sample_count)
    }
}

/// Fit an MVG to feature rows: column means and the unbiased sample covariance.
///
/// Requires more rows than dimensions.
pub fn fit_mvg<R: AsRef<[f64]>>(rows: &[R]) -> Result<MvgModel> {
    let Some(first) = rows.first() else {
        return Err(Error::InsufficientPatches { found: 0, required: 1 });
    };
    let dim = first.as_ref().len();
    if dim == 0 {
        return Err(Error::InvalidParameter("zero-dimensional features"));
    }
    let n = rows.len();
    if n <= dim {
        return Err(Error::InsufficientPatches { found: n, required: dim + 1 });
    }
    let mut mean = vec![0.0; dim];
    for row in rows {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite feature"));
        }
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = vec![0.0; dim * dim];
    let mut centred = vec![0.0; dim];
    for row in rows {
        for ((c, v), m) in centred.iter_mut().zip(row.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..dim {
            let ci = centred[i];
            for j in i..dim {
                cov[i * dim + j] += ci * centred[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / denom;
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }
    MvgModel::new(mean, cov, n)
}

/// In-place lower Cholesky factor of a row-major SPD matrix. Fails on a
/// pivot below the numerical rank threshold.
fn cholesky(a: &mut [f64], dim: usize) -> Option<()> {
    let max_diag = (0..dim).map(|i| a[i * dim + i]).fold(0.0f64, f64::max);
    let threshold = f64::EPSILON * dim as f64 * max_diag;
    if max_diag.is_nan() || max_diag <= 0.0 {
        return None;
    }
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= a[j * dim + k] * a[j * dim + k];
        }
        if d.is_nan() || d <= threshold {
            return None;
        }
        let d = libm::sqrt(d);
        a[j * dim + j] = d;
        for i in (j + 1)..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = s / d;
        }
    }
    Some(())
}

/// `sqrt((μa − μb)ᵀ ((Σa + Σb)/2)⁻¹ (μa − μb))`.
///
/// The pooled covariance is factored directly; if that fails, a ridge of
/// `1e-8 · trace / dim` is added to the diagonal and factoring retried.
pub fn mvg_distance(a: &MvgModel, b: &MvgModel) -> Result<f64> {
    let dim = a.dim();
    if b.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
    }
    let pooled: Vec<f64> = a.covariance.iter().zip(&b.covariance).map(|(x, y)| (x + y) / 2.0).collect();

    let mut factor = pooled.clone();
    if cholesky(&mut factor, dim).is_none() {
        let trace: f64 = (0..dim).map(|i| pooled[i * dim + i]).sum();
        let ridge = 1e-8 * trace / dim as f64;
        factor.copy_from_slice(&pooled);
        for i in 0..dim {
            factor[i * dim + i] += ridge;
        }
        cholesky(&mut factor, dim).ok_or(Error::SingularCovariance)?;
    }

    // Forward substitution L y = d; the quadratic form is |y|².
    let mut y = vec![0.0; dim];
    let mut sum_sq = 0.0;
    for i in 0..dim {
        let mut s = a.mean[i] - b.mean[i];
        for k in 0..i {
            s -= factor[i * dim + k] * y[k];
        }
        y[i] = s / factor[i * dim + i];
        sum_sq += y[i] * y[i];
    }
    Ok(libm::sqrt(sum_sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaled_identity(dim: usize, s: f64) -> Vec<f64> {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = s;
        }
        m
    }

    #[test]
    fn constant_rows_have_zero_covariance() {
        let v: Vec<f64> = (0..36).map(|i| i as f64 * 0.5 - 3.0).collect();
        let rows = vec![v.clone(); 50];
        let m = fit_mvg(&rows).unwrap();
        assert_eq!(m.mean(), &v[..]);
        assert!(m.covariance().iter().all(|&c| c == 0.0));
        assert_eq!(m.sample_count(), 50);
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![[0.0f64; 36]; 36];
        assert_eq!(fit_mvg(&rows).unwrap_err(), Error::InsufficientPatches { found: 36, required: 37 });
        let empty: [[f64; 36]; 0] = [];
        assert!(matches!(fit_mvg(&empty), Err(Error::InsufficientPatches { .. })));
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![1.0], vec![2.0, 3.0], vec![4.0, 5.0]];
        assert!(matches!(fit_mvg(&rows), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn new_rejects_asymmetric() {
        let err = MvgModel::new(vec![0.0, 0.0], vec![1.0, 0.5, 0.2, 1.0], 3).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn distance_hand_cases() {
        let dim = 36;
        let a = MvgModel::new(vec![0.0; dim], scaled_identity(dim, 1.0), 100).unwrap();
        assert_eq!(mvg_distance(&a, &a).unwrap(), 0.0);

        let mut offset = vec![0.0; dim];
        offset[7] = 1.0;
        let b = a.with_mean(offset.clone(), 100).unwrap();
        assert!((mvg_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);

        let a4 = MvgModel::new(vec![0.0; dim], scaled_identity(dim, 4.0), 100).unwrap();
        let b4 = a4.with_mean(offset, 100).unwrap();
        assert!((mvg_distance(&a4, &b4).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_rescues_rank_deficient_pooled_covariance() {
        // Singular in the second coordinate for both models.
        let cov = vec![1.0, 0.0, 0.0, 0.0];
        let a = MvgModel::new(vec![0.0, 0.0], cov.clone(), 10).unwrap();
        let b = MvgModel::new(vec![1.0, 0.0], cov, 10).unwrap();
        let d = mvg_distance(&a, &b).unwrap();
        // ridge = 1e-8 * 1 / 2
        assert!((d - 1.0 / libm::sqrt(1.0 + 5e-9)).abs() < 1e-12);
    }

    #[test]
    fn all_zero_covariance_is_singular() {
        let a = MvgModel::new(vec![0.0; 3], vec![0.0; 9], 10).unwrap();
        let b = a.with_mean(vec![1.0, 0.0, 0.0], 10).unwrap();
        assert_eq!(mvg_distance(&a, &b), Err(Error::SingularCovariance));
    }

    #[test]
    fn dimension_mismatch() {
        let a = MvgModel::new(vec![0.0; 2], scaled_identity(2, 1.0), 3).unwrap();
        let b = MvgModel::new(vec![0.0; 3], scaled_identity(3, 1.0), 4).unwrap();
        assert!(matches!(mvg_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
    }
}
