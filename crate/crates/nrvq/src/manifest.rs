//! Measurement manifests.
//!
//! A manifest lists the streams of a measurement grid with their metadata.
//! It is read from JSON (an object with a `streams` array) or from CSV (one
//! stream per row), chosen by file extension. Relative stream paths resolve
//! against the manifest's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::StreamKey;
use crate::video::VideoGeometry;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest entry {index}: empty path")]
    EmptyPath { index: usize },
    #[error("manifest entry {index}: bitrate_kbps must be > 0")]
    ZeroBitrate { index: usize },
    #[error("duplicate manifest key {key} @ {bitrate_kbps} kbps")]
    DuplicateKey { key: StreamKey, bitrate_kbps: u32 },
    #[error("manifest entry {index}: raw YUV needs width, height and fps")]
    MissingGeometry { index: usize },
    #[error("manifest entry {index}: bad fps {value:?}")]
    BadFps { index: usize, value: String },
    #[error("unsupported manifest extension for {0}")]
    UnknownExtension(PathBuf),
    #[error("malformed manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed manifest CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ManifestError {
    pub fn is_io(&self) -> bool {
        matches!(self, ManifestError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    #[default]
    Y4m,
    Raw,
}

/// One stream as written in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    pub path: String,
    #[serde(default)]
    pub format: StreamFormat,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub height: Option<usize>,
    /// `num/den` or an integer.
    #[serde(default)]
    pub fps: Option<String>,
    pub video_id: String,
    pub encoder_id: String,
    pub use_case: String,
    pub bitrate_kbps: u32,
}

impl StreamEntry {
    pub fn key(&self) -> StreamKey {
        StreamKey::new(&self.video_id, &self.encoder_id, &self.use_case)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
    pub streams: Vec<StreamEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Geometry defaults for raw entries that omit them.
#[derive(Debug, Clone, Default)]
pub struct GeometryDefaults {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fps: Option<String>,
}

pub fn parse_fps(text: &str) -> Option<(u32, u32)> {
    let (n, d) = match text.split_once(['/', ':']) {
        Some((n, d)) => (n.trim().parse().ok()?, d.trim().parse().ok()?),
        None => (text.trim().parse().ok()?, 1),
    };
    (n > 0 && d > 0).then_some((n, d))
}

impl Manifest {
    pub fn parse_json(text: &str) -> Result<Self, ManifestError> {
        let m: Manifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn parse_csv(text: &str) -> Result<Self, ManifestError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let streams = reader.deserialize().collect::<Result<Vec<StreamEntry>, _>>()?;
        let m = Manifest { streams, ..Manifest::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.to_owned(), source })?;
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let mut m = match ext.as_deref() {
            Some("json") => Self::parse_json(&text)?,
            Some("csv") => Self::parse_csv(&text)?,
            _ => return Err(ManifestError::UnknownExtension(path.to_owned())),
        };
        m.base_dir = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = BTreeSet::new();
        for (index, e) in self.streams.iter().enumerate() {
            if e.path.trim().is_empty() {
                return Err(ManifestError::EmptyPath { index });
            }
            if e.bitrate_kbps == 0 {
                return Err(ManifestError::ZeroBitrate { index });
            }
            if let Some(fps) = &e.fps {
                if parse_fps(fps).is_none() {
                    return Err(ManifestError::BadFps { index, value: fps.clone() });
                }
            }
            if !seen.insert((e.key(), e.bitrate_kbps)) {
                return Err(ManifestError::DuplicateKey { key: e.key(), bitrate_kbps: e.bitrate_kbps });
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &StreamEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Geometry of a raw entry, falling back to `defaults`.
    pub fn raw_geometry(&self, index: usize, defaults: &GeometryDefaults) -> Result<VideoGeometry, ManifestError> {
        let e = &self.streams[index];
        let missing = || ManifestError::MissingGeometry { index };
        let width = e.width.or(defaults.width).ok_or_else(missing)?;
        let height = e.height.or(defaults.height).ok_or_else(missing)?;
        let fps = e.fps.as_ref().or(defaults.fps.as_ref()).ok_or_else(missing)?;
        let (n, d) = parse_fps(fps).ok_or_else(|| ManifestError::BadFps { index, value: fps.clone() })?;
        Ok(VideoGeometry::new(width, height, n, d))
    }
}
