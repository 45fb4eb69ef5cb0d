//! Natural-scene-statistics transforms on 8-bit luma planes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Half-width of the local statistics window (7×7).
pub const MSCN_HALF_EXTENT: usize = 3;
/// Gaussian sigma of the local statistics window.
pub const MSCN_SIGMA: f64 = 7.0 / 6.0;
/// Stabilizing constant added to the local deviation, on the 0–255 scale.
pub const MSCN_C: f64 = 1.0;

/// One frame's 8-bit luma samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || samples.len() != width * height {
            return Err(Error::GeometryMismatch { width, height, len: samples.len() });
        }
        Ok(LumaPlane { width, height, samples })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        LumaPlane::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        LumaPlane::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn mean_luma(&self) -> f64 {
        let total: u64 = self.samples.iter().map(|&s| u64::from(s)).sum();
        total as f64 / self.samples.len() as f64
    }
}

/// A real-valued row-major field.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RealField {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> RealField {
        let mut values = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let start = y * self.width + x0;
            values.extend_from_slice(&self.values[start..start + w]);
        }
        RealField { width: w, height: h, values }
    }
}

/// Mean-subtracted contrast-normalized coefficients with the local
/// standard deviation field they were normalized by.
#[derive(Debug, Clone, PartialEq)]
pub struct MscnField {
    pub coefficients: RealField,
    pub sigma: RealField,
}

impl MscnField {
    pub fn width(&self) -> usize {
        self.coefficients.width
    }

    pub fn height(&self) -> usize {
        self.coefficients.height
    }

    /// Sub-rectangle of both fields.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<MscnField> {
        if x + w > self.width() || y + h > self.height() {
            return Err(Error::PatchOutOfBounds { x, y, size: w.max(h) });
        }
        Ok(MscnField { coefficients: self.coefficients.crop(x, y, w, h), sigma: self.sigma.crop(x, y, w, h) })
    }
}

/// Square convolution kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub half_extent: usize,
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn side(&self) -> usize {
        2 * self.half_extent + 1
    }
}

/// Circularly symmetric Gaussian kernel normalized to unit sum.
pub fn gaussian_window(half_extent: usize, sigma: f64) -> Result<Kernel> {
    if half_extent == 0 {
        return Err(Error::InvalidParameter("window half extent must be at least 1"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter("window sigma must be positive"));
    }
    let r = half_extent as isize;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity((2 * half_extent + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push(libm::exp(-((dx * dx + dy * dy) as f64) / denom));
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(Kernel { half_extent, weights })
}

/// Mirror index into `[0, n)` with the edge sample repeated (`c b a | a b c`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - i - 1
    } else {
        i
    };
    r as usize
}

/// MSCN transform with a 7×7 Gaussian window and mirrored borders.
///
/// Local moments are accumulated over differences from the centre sample,
/// which are exact small integers, so a flat neighbourhood yields exactly
/// zero for both the coefficient and the deviation.
pub fn mscn(plane: &LumaPlane) -> Result<MscnField> {
    let side = 2 * MSCN_HALF_EXTENT + 1;
    let (w, h) = (plane.width(), plane.height());
    if w < side || h < side {
        return Err(Error::PlaneTooSmall { width: w, height: h, min_width: side, min_height: side });
    }
    let kernel = gaussian_window(MSCN_HALF_EXTENT, MSCN_SIGMA)?;
    let r = MSCN_HALF_EXTENT;

    let pw = w + 2 * r;
    let ph = h + 2 * r;
    let mut padded = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let sy = reflect(py as isize - r as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - r as isize, w);
            padded.push(i32::from(plane.get(sx, sy)));
        }
    }

    let mut coefficients = Vec::with_capacity(w * h);
    let mut sigma = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let centre = padded[(y + r) * pw + x + r];
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut k = 0;
            for ky in 0..side {
                let row = &padded[(y + ky) * pw + x..(y + ky) * pw + x + side];
                for &v in row {
                    let d = f64::from(v - centre);
                    let wk = kernel.weights[k];
                    s1 += wk * d;
                    s2 += wk * d * d;
                    k += 1;
                }
            }
            let local_sigma = libm::sqrt((s2 - s1 * s1).max(0.0));
            coefficients.push(-s1 / (local_sigma + MSCN_C));
            sigma.push(local_sigma);
        }
    }
    Ok(MscnField {
        coefficients: RealField { width: w, height: h, values: coefficients },
        sigma: RealField { width: w, height: h, values: sigma },
    })
}

/// Products of horizontally, vertically and diagonally adjacent coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFields {
    /// `v(i,j)·v(i,j+1)`
    pub horizontal: RealField,
    /// `v(i,j)·v(i+1,j)`
    pub vertical: RealField,
    /// `v(i,j)·v(i+1,j+1)`
    pub main_diagonal: RealField,
    /// `v(i,j)·v(i+1,j−1)`
    pub anti_diagonal: RealField,
}

impl ProductFields {
    /// Fields in H, V, D1, D2 order.
    pub fn as_array(&self) -> [&RealField; 4] {
        [&self.horizontal, &self.vertical, &self.main_diagonal, &self.anti_diagonal]
    }
}

pub fn pairwise_products(field: &RealField) -> Result<ProductFields> {
    let (w, h) = (field.width, field.height);
    if w < 2 || h < 2 {
        return Err(Error::PlaneTooSmall { width: w, height: h, min_width: 2, min_height: 2 });
    }
    let build = |fw: usize, fh: usize, f: &dyn Fn(usize, usize) -> f64| {
        let mut values = Vec::with_capacity(fw * fh);
        for i in 0..fh {
            for j in 0..fw {
                values.push(f(j, i));
            }
        }
        RealField { width: fw, height: fh, values }
    };
    let v = |x: usize, y: usize| field.get(x, y);
    Ok(ProductFields {
        horizontal: build(w - 1, h, &|j, i| v(j, i) * v(j + 1, i)),
        vertical: build(w, h - 1, &|j, i| v(j, i) * v(j, i + 1)),
        main_diagonal: build(w - 1, h - 1, &|j, i| v(j, i) * v(j + 1, i + 1)),
        anti_diagonal: build(w - 1, h - 1, &|j, i| v(j + 1, i) * v(j, i + 1)),
    })
}

/// Halve both dimensions with a rounded 2×2 box average; odd remainders dropped.
pub fn downsample2(plane: &LumaPlane) -> Result<LumaPlane> {
    let (w, h) = (plane.width(), plane.height());
    if w < 2 || h < 2 {
        return Err(Error::PlaneTooSmall { width: w, height: h, min_width: 2, min_height: 2 });
    }
    let (ow, oh) = (w / 2, h / 2);
    LumaPlane::from_fn(ow, oh, |x, y| {
        let sum = u16::from(plane.get(2 * x, 2 * y))
            + u16::from(plane.get(2 * x + 1, 2 * y))
            + u16::from(plane.get(2 * x, 2 * y + 1))
            + u16::from(plane.get(2 * x + 1, 2 * y + 1));
        ((sum + 2) / 4) as u8
    })
}
