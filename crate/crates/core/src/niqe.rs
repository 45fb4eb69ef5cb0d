//! NIQE: patch features, sharpness gating, pristine-model training and
//! per-frame scoring.
//!
//! A frame is described at two scales (full resolution and a 2×2 box
//! downsample). Each patch contributes 18 values per scale: the GGD fit of
//! its MSCN coefficients and AGGD fits of the four neighbour-product fields.
//! The frame score is the distance between the pristine MVG and an MVG fit
//! to the frame's own patch features. Lower is better.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{downsample2, mscn, pairwise_products, LumaPlane, MscnField, RealField};
use crate::math::{fit_aggd, fit_ggd, fit_mvg, mvg_distance, MvgModel};

pub const FEATURE_DIM: usize = 36;
const FEATURES_PER_SCALE: usize = 18;

/// Score assigned to a frame whose every patch is flat. Well above the
/// pooling cut-off, so it carries zero weight.
pub const DEGENERATE_FRAME_SCORE: f64 = 100.0;

pub const DEFAULT_PATCH_SIZE: usize = 96;
pub const DEFAULT_SHARPNESS_FRACTION: f64 = 0.75;
const MIN_PATCH_SIZE: usize = 24;

/// Feature names in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "s1_ggd_alpha",
    "s1_ggd_sigma_sq",
    "s1_h_alpha",
    "s1_h_mean",
    "s1_h_sigma_left_sq",
    "s1_h_sigma_right_sq",
    "s1_v_alpha",
    "s1_v_mean",
    "s1_v_sigma_left_sq",
    "s1_v_sigma_right_sq",
    "s1_d1_alpha",
    "s1_d1_mean",
    "s1_d1_sigma_left_sq",
    "s1_d1_sigma_right_sq",
    "s1_d2_alpha",
    "s1_d2_mean",
    "s1_d2_sigma_left_sq",
    "s1_d2_sigma_right_sq",
    "s2_ggd_alpha",
    "s2_ggd_sigma_sq",
    "s2_h_alpha",
    "s2_h_mean",
    "s2_h_sigma_left_sq",
    "s2_h_sigma_right_sq",
    "s2_v_alpha",
    "s2_v_mean",
    "s2_v_sigma_left_sq",
    "s2_v_sigma_right_sq",
    "s2_d1_alpha",
    "s2_d1_mean",
    "s2_d1_sigma_left_sq",
    "s2_d1_sigma_right_sq",
    "s2_d2_alpha",
    "s2_d2_mean",
    "s2_d2_sigma_left_sq",
    "s2_d2_sigma_right_sq",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Identifiers of the fixed NSS transform constants. Models trained with
/// other settings are not comparable and are rejected on load.
#[derive(Debug, Clone, PartialEq)]
pub struct NssSettings {
    pub window_side: usize,
    pub window_sigma: f64,
    pub stabilizer: f64,
    pub border: String,
    pub downsampling: String,
}

impl Default for NssSettings {
    fn default() -> Self {
        NssSettings {
            window_side: 2 * crate::image::MSCN_HALF_EXTENT + 1,
            window_sigma: crate::image::MSCN_SIGMA,
            stabilizer: crate::image::MSCN_C,
            border: String::from("symmetric"),
            downsampling: String::from("box2x2-rounded"),
        }
    }
}

impl NssSettings {
    pub fn is_supported(&self) -> bool {
        *self == NssSettings::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiqeSettings {
    pub patch_size: usize,
    pub sharpness_fraction: f64,
}

impl Default for NiqeSettings {
    fn default() -> Self {
        NiqeSettings { patch_size: DEFAULT_PATCH_SIZE, sharpness_fraction: DEFAULT_SHARPNESS_FRACTION }
    }
}

impl NiqeSettings {
    pub fn validate(&self) -> Result<()> {
        validate_patch_size(self.patch_size)?;
        if !(self.sharpness_fraction > 0.0 && self.sharpness_fraction <= 1.0) {
            return Err(Error::InvalidParameter("sharpness fraction must be in (0, 1]"));
        }
        Ok(())
    }
}

fn validate_patch_size(patch_size: usize) -> Result<()> {
    if !patch_size.is_multiple_of(2) || patch_size < MIN_PATCH_SIZE {
        return Err(Error::InvalidParameter("patch size must be even and at least 24"));
    }
    Ok(())
}

/// Pristine MVG plus the settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqeModel {
    mvg: MvgModel,
    settings: NiqeSettings,
    nss: NssSettings,
    corpus_descriptor: String,
}

impl NiqeModel {
    pub fn new(mvg: MvgModel, settings: NiqeSettings, nss: NssSettings, corpus_descriptor: String) -> Result<Self> {
        settings.validate()?;
        if mvg.dim() != FEATURE_DIM {
            return Err(Error::DimensionMismatch { expected: FEATURE_DIM, found: mvg.dim() });
        }
        if !nss.is_supported() {
            return Err(Error::InvalidParameter("unsupported NSS settings"));
        }
        Ok(NiqeModel { mvg, settings, nss, corpus_descriptor })
    }

    pub fn mvg(&self) -> &MvgModel {
        &self.mvg
    }

    pub fn settings(&self) -> &NiqeSettings {
        &self.settings
    }

    pub fn nss(&self) -> &NssSettings {
        &self.nss
    }

    pub fn corpus_descriptor(&self) -> &str {
        &self.corpus_descriptor
    }
}

/// Per-frame NIQE result. `score` is in NIQE units, lower is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameScore {
    pub frame_index: usize,
    pub score: f64,
    pub patch_count: usize,
    pub mean_luma: f64,
    /// Every selected patch was flat; `score` is [`DEGENERATE_FRAME_SCORE`].
    pub degenerate_frame: bool,
    /// Too few patches for a frame covariance; the pristine one was used.
    pub covariance_fallback: bool,
}

/// MSCN fields at both scales of one plane.
#[derive(Debug, Clone)]
pub struct NssPyramid {
    pub fine: MscnField,
    pub coarse: MscnField,
}

impl NssPyramid {
    pub fn new(plane: &LumaPlane) -> Result<Self> {
        let fine = mscn(plane)?;
        let coarse = mscn(&downsample2(plane)?)?;
        Ok(NssPyramid { fine, coarse })
    }

    /// Features of the `patch_size` square at `(x, y)` (full-resolution
    /// coordinates); the coarse patch is the co-located half-size square.
    pub fn patch_features(&self, x: usize, y: usize, patch_size: usize) -> Result<FeatureVector> {
        validate_patch_size(patch_size)?;
        let oob = Error::PatchOutOfBounds { x, y, size: patch_size };
        if x + patch_size > self.fine.width() || y + patch_size > self.fine.height() {
            return Err(oob);
        }
        let half = patch_size / 2;
        if x / 2 + half > self.coarse.width() || y / 2 + half > self.coarse.height() {
            return Err(oob);
        }
        let mut out = [0.0; FEATURE_DIM];
        let fine = self.fine.crop(x, y, patch_size, patch_size)?;
        scale_features(&fine.coefficients, &mut out[..FEATURES_PER_SCALE])?;
        let coarse = self.coarse.crop(x / 2, y / 2, half, half)?;
        scale_features(&coarse.coefficients, &mut out[FEATURES_PER_SCALE..])?;
        Ok(FeatureVector(out))
    }
}

fn scale_features(coefficients: &RealField, out: &mut [f64]) -> Result<()> {
    let ggd = fit_ggd(&coefficients.values)?;
    out[0] = ggd.alpha;
    out[1] = ggd.sigma * ggd.sigma;
    let products = pairwise_products(coefficients)?;
    for (k, field) in products.as_array().into_iter().enumerate() {
        let p = fit_aggd(&field.values)?;
        let base = 2 + 4 * k;
        out[base] = p.alpha;
        out[base + 1] = p.mean;
        out[base + 2] = p.sigma_left * p.sigma_left;
        out[base + 3] = p.sigma_right * p.sigma_right;
    }
    Ok(())
}

/// Features of one patch, computing the plane's MSCN fields from scratch.
pub fn extract_patch_features(plane: &LumaPlane, origin: (usize, usize), patch_size: usize) -> Result<FeatureVector> {
    let (x, y) = origin;
    if x + patch_size > plane.width() || y + patch_size > plane.height() {
        return Err(Error::PatchOutOfBounds { x, y, size: patch_size });
    }
    NssPyramid::new(plane)?.patch_features(x, y, patch_size)
}

/// Origins of non-overlapping tiles whose mean local deviation is at least
/// `fraction` of the sharpest tile's. Tiles start at (0, 0); right and
/// bottom remainders are dropped.
pub fn select_sharp_patches(sigma_field: &RealField, patch_size: usize, fraction: f64) -> Result<Vec<(usize, usize)>> {
    if patch_size == 0 {
        return Err(Error::InvalidParameter("patch size must be positive"));
    }
    let (w, h) = (sigma_field.width, sigma_field.height);
    let (cols, rows) = (w / patch_size, h / patch_size);
    if cols == 0 || rows == 0 {
        return Err(Error::NoPatchesFit { width: w, height: h, patch_size });
    }
    let mut tiles = Vec::with_capacity(cols * rows);
    for ty in 0..rows {
        for tx in 0..cols {
            let (x0, y0) = (tx * patch_size, ty * patch_size);
            let mut sum = 0.0;
            for y in y0..y0 + patch_size {
                let row = &sigma_field.values[y * w + x0..y * w + x0 + patch_size];
                sum += row.iter().sum::<f64>();
            }
            tiles.push(((x0, y0), sum / (patch_size * patch_size) as f64));
        }
    }
    let max = tiles.iter().map(|t| t.1).fold(0.0f64, f64::max);
    let threshold = fraction * max;
    Ok(tiles.into_iter().filter(|t| t.1 >= threshold).map(|t| t.0).collect())
}

/// Features of one frame's retained patches.
#[derive(Debug, Clone, Default)]
pub struct FrameFeatures {
    pub features: Vec<FeatureVector>,
    /// Retained patches skipped because a fitter saw degenerate input.
    pub degenerate_patches: usize,
}

pub fn frame_features(plane: &LumaPlane, settings: &NiqeSettings) -> Result<FrameFeatures> {
    settings.validate()?;
    let p = settings.patch_size;
    if plane.width() < p || plane.height() < p {
        return Err(Error::NoPatchesFit { width: plane.width(), height: plane.height(), patch_size: p });
    }
    let pyramid = NssPyramid::new(plane)?;
    let origins = select_sharp_patches(&pyramid.fine.sigma, p, settings.sharpness_fraction)?;
    let mut out = FrameFeatures::default();
    for (x, y) in origins {
        match pyramid.patch_features(x, y, p) {
            Ok(f) => out.features.push(f),
            Err(Error::DegenerateInput(_)) => out.degenerate_patches += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Fit the pristine MVG from already-extracted per-frame features.
pub fn train_from_features<I>(frames: I, settings: NiqeSettings, corpus_descriptor: String) -> Result<NiqeModel>
where
    I: IntoIterator<Item = FrameFeatures>,
{
    settings.validate()?;
    let mut rows = Vec::new();
    let mut degenerate = 0;
    for f in frames {
        rows.extend(f.features);
        degenerate += f.degenerate_patches;
    }
    if rows.is_empty() && degenerate > 0 {
        return Err(Error::DegenerateInput("every retained training patch is flat"));
    }
    if rows.len() <= FEATURE_DIM {
        return Err(Error::InsufficientPatches { found: rows.len(), required: FEATURE_DIM + 1 });
    }
    let mvg = fit_mvg(&rows)?;
    NiqeModel::new(mvg, settings, NssSettings::default(), corpus_descriptor)
}

pub fn train_model(pristine_frames: &[LumaPlane], settings: NiqeSettings) -> Result<NiqeModel> {
    let features = pristine_frames.iter().map(|p| frame_features(p, &settings)).collect::<Result<Vec<_>>>()?;
    let descriptor = alloc::format!("{} frames", pristine_frames.len());
    train_from_features(features, settings, descriptor)
}

/// NIQE score of one frame; `frame_index` is left at 0.
pub fn score_frame(plane: &LumaPlane, model: &NiqeModel) -> Result<FrameScore> {
    let features = frame_features(plane, model.settings())?;
    let mean_luma = plane.mean_luma();
    let count = features.features.len();
    if count == 0 {
        return Ok(FrameScore {
            frame_index: 0,
            score: DEGENERATE_FRAME_SCORE,
            patch_count: 0,
            mean_luma,
            degenerate_frame: true,
            covariance_fallback: false,
        });
    }
    let pristine = model.mvg();
    let covariance_fallback = count <= FEATURE_DIM;
    let frame_mvg = if covariance_fallback {
        let mut mean = alloc::vec![0.0; FEATURE_DIM];
        for f in &features.features {
            for (m, v) in mean.iter_mut().zip(&f.0) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= count as f64;
        }
        pristine.with_mean(mean, count)?
    } else {
        fit_mvg(&features.features)?
    };
    let score = mvg_distance(pristine, &frame_mvg)?;
    Ok(FrameScore {
        frame_index: 0,
        score,
        patch_count: count,
        mean_luma,
        degenerate_frame: false,
        covariance_fallback,
    })
}

/// Scores frames sequentially, numbering them from 0.
pub fn score_frames<'a, I>(planes: I, model: &NiqeModel) -> Result<Vec<FrameScore>>
where
    I: IntoIterator<Item = &'a LumaPlane>,
{
    planes
        .into_iter()
        .enumerate()
        .map(|(i, p)| score_frame(p, model).map(|s| FrameScore { frame_index: i, ..s }))
        .collect()
}
