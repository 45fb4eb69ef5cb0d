//! Versioned JSON serialization of trained NIQE models.
//!
//! Keys are written in a fixed order; the covariance is row-major. Readers
//! reject unknown `format_version` values and models whose NSS constants or
//! feature layout differ from this build.

use std::fs;
use std::path::Path;

use nrvq_core::math::MvgModel;
use nrvq_core::niqe::{FEATURE_DIM, FEATURE_NAMES};
use nrvq_core::{NiqeModel, NiqeSettings};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("unsupported model format_version {0}")]
    UnknownVersion(u64),
    #[error("model file has no format_version")]
    MissingVersion,
    #[error("feature layout does not match this build")]
    FeatureLayout,
    #[error("invalid model: {0}")]
    Invalid(#[from] nrvq_core::Error),
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NssBlock {
    pub window_side: usize,
    pub window_sigma: f64,
    pub stabilizer: f64,
    pub border: String,
    pub downsampling: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsBlock {
    pub patch_size: usize,
    pub sharpness_fraction: f64,
    pub nss: NssBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub dimension: usize,
    pub sample_count: usize,
    pub corpus_descriptor: String,
    pub settings: SettingsBlock,
    pub feature_layout: Vec<String>,
    pub mean: Vec<f64>,
    /// Row-major `dimension × dimension`.
    pub covariance: Vec<f64>,
}

impl SettingsBlock {
    pub fn from_model(model: &NiqeModel) -> Self {
        let nss = model.nss();
        SettingsBlock {
            patch_size: model.settings().patch_size,
            sharpness_fraction: model.settings().sharpness_fraction,
            nss: NssBlock {
                window_side: nss.window_side,
                window_sigma: nss.window_sigma,
                stabilizer: nss.stabilizer,
                border: nss.border.clone(),
                downsampling: nss.downsampling.clone(),
            },
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("settings serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl ModelDocument {
    pub fn from_model(model: &NiqeModel) -> Self {
        let mvg = model.mvg();
        ModelDocument {
            format_version: FORMAT_VERSION,
            dimension: mvg.dim(),
            sample_count: mvg.sample_count(),
            corpus_descriptor: model.corpus_descriptor().to_owned(),
            settings: SettingsBlock::from_model(model),
            feature_layout: FEATURE_NAMES.iter().map(|s| (*s).to_owned()).collect(),
            mean: mvg.mean().to_vec(),
            covariance: mvg.covariance().to_vec(),
        }
    }

    pub fn into_model(self) -> Result<NiqeModel, ModelFileError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelFileError::UnknownVersion(self.format_version.into()));
        }
        if self.dimension != FEATURE_DIM || self.feature_layout.iter().map(String::as_str).ne(FEATURE_NAMES) {
            return Err(ModelFileError::FeatureLayout);
        }
        let mvg = MvgModel::new(self.mean, self.covariance, self.sample_count)?;
        let s = self.settings;
        let settings = NiqeSettings { patch_size: s.patch_size, sharpness_fraction: s.sharpness_fraction };
        let nss = nrvq_core::niqe::NssSettings {
            window_side: s.nss.window_side,
            window_sigma: s.nss.window_sigma,
            stabilizer: s.nss.stabilizer,
            border: s.nss.border,
            downsampling: s.nss.downsampling,
        };
        Ok(NiqeModel::new(mvg, settings, nss, self.corpus_descriptor)?)
    }
}

pub fn to_json(model: &NiqeModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDocument::from_model(model)).expect("model serialize");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<NiqeModel, ModelFileError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("format_version").and_then(serde_json::Value::as_u64) {
        None => return Err(ModelFileError::MissingVersion),
        Some(v) if v != u64::from(FORMAT_VERSION) => return Err(ModelFileError::UnknownVersion(v)),
        Some(_) => {}
    }
    let doc: ModelDocument = serde_json::from_value(value)?;
    doc.into_model()
}

pub fn save(model: &NiqeModel, path: &Path) -> Result<(), ModelFileError> {
    fs::write(path, to_json(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<NiqeModel, ModelFileError> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nrvq_core::niqe::NssSettings;

    fn identity_model() -> NiqeModel {
        let mut cov = vec![0.0; FEATURE_DIM * FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            cov[i * FEATURE_DIM + i] = 1.0 + i as f64 / 7.0;
        }
        let mean = (0..FEATURE_DIM).map(|i| (i as f64).sin()).collect();
        let mvg = MvgModel::new(mean, cov, 99).unwrap();
        NiqeModel::new(mvg, NiqeSettings::default(), NssSettings::default(), "unit".into()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = identity_model();
        let text = to_json(&m);
        assert_eq!(from_json(&text).unwrap(), m);
        assert_eq!(to_json(&from_json(&text).unwrap()), text);
    }

    #[test]
    fn canonical_key_order() {
        let text = to_json(&identity_model());
        let keys = [
            "format_version",
            "dimension",
            "sample_count",
            "corpus_descriptor",
            "settings",
            "feature_layout",
            "mean",
            "covariance",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_unknown_version() {
        let text = to_json(&identity_model()).replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(from_json(&text), Err(ModelFileError::UnknownVersion(2))));
        assert!(matches!(from_json("{\"mean\": []}"), Err(ModelFileError::MissingVersion)));
    }

    #[test]
    fn rejects_foreign_nss_settings() {
        let text = to_json(&identity_model()).replace("\"symmetric\"", "\"replicate\"");
        assert!(matches!(from_json(&text), Err(ModelFileError::Invalid(_))));
    }

    #[test]
    fn settings_hash_is_stable() {
        let a = SettingsBlock::from_model(&identity_model());
        assert_eq!(a.hash(), a.clone().hash());
        assert_eq!(a.hash().len(), 64);
        let mut b = a.clone();
        b.patch_size = 48;
        assert_ne!(a.hash(), b.hash());
    }
}
