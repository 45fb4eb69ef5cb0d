//! Codec-comparison analytics over pooled stream scores: rate-distortion
//! curves, monotonicity checks, plot inversion and correlation with
//! subjective scores.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use nrvq_core::math::pearson;
use nrvq_core::PooledScore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed score increase between adjacent bitrates before a pair counts
/// as a quality regression, in NIQE units.
pub const MONOTONIC_TOLERANCE: f64 = 0.05;

/// Minimum matched points for a per-video correlation.
pub const MIN_CORRELATION_POINTS: usize = 3;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("duplicate point for {key} at {bitrate_kbps} kbps")]
    DuplicatePoint { key: StreamKey, bitrate_kbps: u32 },
    #[error("curve {0} has fewer than 2 points")]
    TooFewPoints(StreamKey),
    #[error("{0}: bitrate must be positive")]
    ZeroBitrate(StreamKey),
    #[error("no video has at least {MIN_CORRELATION_POINTS} points matched with subjective scores")]
    NoOverlap,
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub video_id: String,
    pub encoder_id: String,
    pub use_case: String,
}

impl StreamKey {
    pub fn new(video_id: impl Into<String>, encoder_id: impl Into<String>, use_case: impl Into<String>) -> Self {
        StreamKey { video_id: video_id.into(), encoder_id: encoder_id.into(), use_case: use_case.into() }
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.video_id, self.encoder_id, self.use_case)
    }
}

/// One encoded stream's pooled result.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    pub key: StreamKey,
    pub bitrate_kbps: u32,
    pub pooled: PooledScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    pub bitrate_kbps: u32,
    pub score: f64,
}

/// Adjacent bitrate pair where the higher bitrate scored worse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub lower_kbps: u32,
    pub higher_kbps: u32,
    pub lower_score: f64,
    pub higher_score: f64,
    /// `higher_score - lower_score`, always above the tolerance.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve {
    pub key: StreamKey,
    /// Strictly increasing in bitrate.
    pub points: Vec<RdPoint>,
    pub violations: Vec<Violation>,
}

/// Groups records by stream key and sorts each group by bitrate. Curves come
/// out in key order.
pub fn build_rd_curves(records: &[StreamRecord]) -> Result<Vec<RdCurve>> {
    let mut groups: BTreeMap<&StreamKey, BTreeMap<u32, f64>> = BTreeMap::new();
    for r in records {
        if r.bitrate_kbps == 0 {
            return Err(AnalysisError::ZeroBitrate(r.key.clone()));
        }
        match groups.entry(&r.key).or_default().entry(r.bitrate_kbps) {
            Entry::Occupied(_) => {
                return Err(AnalysisError::DuplicatePoint { key: r.key.clone(), bitrate_kbps: r.bitrate_kbps })
            }
            Entry::Vacant(v) => {
                v.insert(r.pooled.score);
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, pts)| {
            let mut curve = RdCurve {
                key: key.clone(),
                points: pts.into_iter().map(|(bitrate_kbps, score)| RdPoint { bitrate_kbps, score }).collect(),
                violations: Vec::new(),
            };
            curve.violations = check_monotonic(&curve).unwrap_or_default();
            curve
        })
        .collect())
}

/// Adjacent pairs whose score rises by more than [`MONOTONIC_TOLERANCE`]
/// as bitrate increases (lower scores are better).
pub fn check_monotonic(curve: &RdCurve) -> Result<Vec<Violation>> {
    if curve.points.len() < 2 {
        return Err(AnalysisError::TooFewPoints(curve.key.clone()));
    }
    Ok(curve
        .points
        .windows(2)
        .filter(|w| w[1].score > w[0].score + MONOTONIC_TOLERANCE)
        .map(|w| Violation {
            lower_kbps: w[0].bitrate_kbps,
            higher_kbps: w[1].bitrate_kbps,
            lower_score: w[0].score,
            higher_score: w[1].score,
            delta: w[1].score - w[0].score,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlotPoint {
    pub bitrate_kbps: u32,
    /// Negated score, so higher is better on a plot.
    pub plotted: f64,
}

pub fn invert_for_plot(curve: &RdCurve) -> Vec<PlotPoint> {
    curve
        .points
        .iter()
        .map(|p| PlotPoint { bitrate_kbps: p.bitrate_kbps, plotted: if p.score == 0.0 { 0.0 } else { -p.score } })
        .collect()
}

/// One row of a subjective score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveRow {
    pub video_id: String,
    pub encoder_id: String,
    pub use_case: String,
    pub bitrate_kbps: u32,
    pub mos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoCorrelation {
    pub video_id: String,
    pub points: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedVideo {
    pub video_id: String,
    pub points: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub per_video: Vec<VideoCorrelation>,
    pub skipped: Vec<SkippedVideo>,
    /// Unweighted mean of the per-video coefficients.
    pub average_r: f64,
}

/// Per-video Pearson correlation between negated metric scores and MOS,
/// matched on (key, bitrate). Videos with too few points or a constant
/// column are skipped and listed.
pub fn correlate_with_subjective(records: &[StreamRecord], subjective: &[SubjectiveRow]) -> Result<CorrelationReport> {
    let mut mos: BTreeMap<(StreamKey, u32), f64> = BTreeMap::new();
    for row in subjective {
        let key = StreamKey::new(&row.video_id, &row.encoder_id, &row.use_case);
        if mos.insert((key.clone(), row.bitrate_kbps), row.mos).is_some() {
            return Err(AnalysisError::DuplicatePoint { key, bitrate_kbps: row.bitrate_kbps });
        }
    }

    let mut metric_keys = std::collections::BTreeSet::new();
    let mut per_video: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut sorted: Vec<&StreamRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.key, a.bitrate_kbps).cmp(&(&b.key, b.bitrate_kbps)));
    for r in sorted {
        if !metric_keys.insert((&r.key, r.bitrate_kbps)) {
            return Err(AnalysisError::DuplicatePoint { key: r.key.clone(), bitrate_kbps: r.bitrate_kbps });
        }
        let entry = per_video.entry(r.key.video_id.as_str()).or_default();
        if let Some(&m) = mos.get(&(r.key.clone(), r.bitrate_kbps)) {
            entry.0.push(-r.pooled.score);
            entry.1.push(m);
        }
    }
    // Videos present only in the subjective table are reported as skipped too.
    for (key, _) in mos.keys() {
        per_video.entry(key.video_id.as_str()).or_default();
    }

    let mut report = CorrelationReport { per_video: Vec::new(), skipped: Vec::new(), average_r: f64::NAN };
    for (video, (metric, subj)) in per_video {
        let points = metric.len();
        if points < MIN_CORRELATION_POINTS {
            report.skipped.push(SkippedVideo {
                video_id: video.to_owned(),
                points,
                reason: format!("insufficient overlap: {points} matched points"),
            });
            continue;
        }
        match pearson(&metric, &subj) {
            Ok(r) => report.per_video.push(VideoCorrelation { video_id: video.to_owned(), points, r }),
            Err(e) => report.skipped.push(SkippedVideo { video_id: video.to_owned(), points, reason: e.to_string() }),
        }
    }
    if report.per_video.is_empty() {
        return Err(AnalysisError::NoOverlap);
    }
    report.average_r = report.per_video.iter().map(|v| v.r).sum::<f64>() / report.per_video.len() as f64;
    Ok(report)
}
