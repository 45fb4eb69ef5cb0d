//! CSV and JSON report emission.
//!
//! CSV files are comma-separated with a header row, `.` decimal point and LF
//! line endings. Reals are printed with 9 significant digits (C `%.9g`),
//! and JSON reals are rounded to the same precision, so identical inputs
//! give byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use csv::{Terminator, WriterBuilder};
use nrvq_core::pooling::FrameDiagnostics;
use nrvq_core::{FrameScore, PooledScore, PoolingMethod};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{invert_for_plot, CorrelationReport, RdCurve, StreamKey, StreamRecord};
use crate::model_file::SettingsBlock;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, ReportError>;

/// `%.9g` formatting.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        format!("{}e{}{:02}", strip_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x.is_finite() {
        fmt_sig9(x).parse().expect("sig9 parses")
    } else {
        x
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out)
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub const FRAME_HEADER: [&str; 5] = ["frame_index", "score", "weight", "dark_frame", "outlier"];

pub fn write_frame_csv<W: Write>(out: W, frames: &[FrameScore], diagnostics: &[FrameDiagnostics]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(FRAME_HEADER)?;
    for (f, d) in frames.iter().zip(diagnostics) {
        w.write_record([
            f.frame_index.to_string(),
            fmt_sig9(f.score),
            fmt_sig9(d.weight),
            flag(d.dark_frame).into(),
            flag(d.outlier_score).into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pooled results of one measured stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSummary {
    pub key: StreamKey,
    pub bitrate_kbps: u32,
    pub weighted: PooledScore,
    pub mean: PooledScore,
    /// Curve violations whose higher-bitrate end is this stream.
    pub violations: usize,
}

/// A parsed row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub video_id: String,
    pub encoder_id: String,
    pub use_case: String,
    pub bitrate_kbps: u32,
    pub frames: usize,
    pub weighted_score: f64,
    pub mean_score: f64,
    pub total_weight: f64,
    pub frames_zero_weight: usize,
    pub fallback_used: bool,
    pub violations: usize,
}

pub const SUMMARY_HEADER: [&str; 11] = [
    "video_id",
    "encoder_id",
    "use_case",
    "bitrate_kbps",
    "frames",
    "weighted_score",
    "mean_score",
    "total_weight",
    "frames_zero_weight",
    "fallback_used",
    "violations",
];

/// Which pooled score feeds the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreChoice {
    #[default]
    Weighted,
    Mean,
}

impl SummaryRow {
    pub fn key(&self) -> StreamKey {
        StreamKey::new(&self.video_id, &self.encoder_id, &self.use_case)
    }

    pub fn to_record(&self, choice: ScoreChoice) -> StreamRecord {
        let pooled = match choice {
            ScoreChoice::Weighted => PooledScore {
                score: self.weighted_score,
                method: PoolingMethod::Weighted,
                total_weight: self.total_weight,
                frames_total: self.frames,
                frames_zero_weight: self.frames_zero_weight,
                fallback_used: self.fallback_used,
            },
            ScoreChoice::Mean => PooledScore {
                score: self.mean_score,
                method: PoolingMethod::Mean,
                total_weight: self.frames as f64,
                frames_total: self.frames,
                frames_zero_weight: 0,
                fallback_used: false,
            },
        };
        StreamRecord { key: self.key(), bitrate_kbps: self.bitrate_kbps, pooled }
    }
}

/// Writes rows sorted by key then bitrate.
pub fn write_summary_csv<W: Write>(out: W, rows: &[StreamSummary]) -> Result<()> {
    let mut sorted: Vec<&StreamSummary> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.key, a.bitrate_kbps).cmp(&(&b.key, b.bitrate_kbps)));
    let mut w = csv_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in sorted {
        w.write_record([
            s.key.video_id.clone(),
            s.key.encoder_id.clone(),
            s.key.use_case.clone(),
            s.bitrate_kbps.to_string(),
            s.weighted.frames_total.to_string(),
            fmt_sig9(s.weighted.score),
            fmt_sig9(s.mean.score),
            fmt_sig9(s.weighted.total_weight),
            s.weighted.frames_zero_weight.to_string(),
            flag(s.weighted.fallback_used).into(),
            s.violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: io::Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?)
}

pub fn read_subjective_csv<R: io::Read>(input: R) -> Result<Vec<crate::analysis::SubjectiveRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

/// A stream that could not be measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamFailure {
    pub video_id: String,
    pub encoder_id: String,
    pub use_case: String,
    pub bitrate_kbps: u32,
    pub path: String,
    pub error: String,
}

pub fn write_failures_csv<W: Write>(out: W, failures: &[StreamFailure]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["video_id", "encoder_id", "use_case", "bitrate_kbps", "path", "error"])?;
    for f in failures {
        w.write_record([
            f.video_id.as_str(),
            &f.encoder_id,
            &f.use_case,
            &f.bitrate_kbps.to_string(),
            &f.path,
            &f.error,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rd_csv<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["video_id", "encoder_id", "use_case", "bitrate_kbps", "score"])?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.key.video_id.as_str(),
                &c.key.encoder_id,
                &c.key.use_case,
                &p.bitrate_kbps.to_string(),
                &fmt_sig9(p.score),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_plot_csv<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["video_id", "encoder_id", "use_case", "bitrate_kbps", "plotted"])?;
    for c in curves {
        for p in invert_for_plot(c) {
            w.write_record([
                c.key.video_id.as_str(),
                &c.key.encoder_id,
                &c.key.use_case,
                &p.bitrate_kbps.to_string(),
                &fmt_sig9(p.plotted),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_violations_csv<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "video_id",
        "encoder_id",
        "use_case",
        "bitrate_low_kbps",
        "bitrate_high_kbps",
        "score_low",
        "score_high",
        "delta",
    ])?;
    for c in curves {
        for v in &c.violations {
            w.write_record([
                c.key.video_id.as_str(),
                &c.key.encoder_id,
                &c.key.use_case,
                &v.lower_kbps.to_string(),
                &v.higher_kbps.to_string(),
                &fmt_sig9(v.lower_score),
                &fmt_sig9(v.higher_score),
                &fmt_sig9(v.delta),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct JsonPooled {
    score: f64,
    method: &'static str,
    total_weight: f64,
    frames_total: usize,
    frames_zero_weight: usize,
    fallback_used: bool,
}

impl From<&PooledScore> for JsonPooled {
    fn from(p: &PooledScore) -> Self {
        JsonPooled {
            score: round9(p.score),
            method: match p.method {
                PoolingMethod::Weighted => "weighted",
                PoolingMethod::Mean => "mean",
            },
            total_weight: round9(p.total_weight),
            frames_total: p.frames_total,
            frames_zero_weight: p.frames_zero_weight,
            fallback_used: p.fallback_used,
        }
    }
}

#[derive(Debug, Serialize)]
struct JsonFrame {
    frame_index: usize,
    score: f64,
    weight: f64,
    dark_frame: bool,
    outlier: bool,
    degenerate_frame: bool,
    covariance_fallback: bool,
    patch_count: usize,
    mean_luma: f64,
}

#[derive(Debug, Serialize)]
struct JsonStream<'a> {
    video_id: &'a str,
    encoder_id: &'a str,
    use_case: &'a str,
    bitrate_kbps: u32,
    path: &'a str,
    weighted: JsonPooled,
    mean: JsonPooled,
    violations: usize,
    frames: Vec<JsonFrame>,
}

#[derive(Debug, Serialize)]
struct JsonPoint {
    bitrate_kbps: u32,
    score: f64,
    plotted: f64,
}

#[derive(Debug, Serialize)]
struct JsonViolation {
    lower_kbps: u32,
    higher_kbps: u32,
    delta: f64,
}

#[derive(Debug, Serialize)]
struct JsonCurve<'a> {
    video_id: &'a str,
    encoder_id: &'a str,
    use_case: &'a str,
    points: Vec<JsonPoint>,
    violations: Vec<JsonViolation>,
}

fn json_curves(curves: &[RdCurve]) -> Vec<JsonCurve<'_>> {
    curves
        .iter()
        .map(|c| JsonCurve {
            video_id: &c.key.video_id,
            encoder_id: &c.key.encoder_id,
            use_case: &c.key.use_case,
            points: c
                .points
                .iter()
                .zip(invert_for_plot(c))
                .map(|(p, q)| JsonPoint {
                    bitrate_kbps: p.bitrate_kbps,
                    score: round9(p.score),
                    plotted: round9(q.plotted),
                })
                .collect(),
            violations: c
                .violations
                .iter()
                .map(|v| JsonViolation { lower_kbps: v.lower_kbps, higher_kbps: v.higher_kbps, delta: round9(v.delta) })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct JsonModel<'a> {
    settings_hash: String,
    settings: &'a SettingsBlock,
    corpus_descriptor: &'a str,
    sample_count: usize,
}

#[derive(Debug, Serialize)]
struct JsonMeasureReport<'a> {
    model: JsonModel<'a>,
    streams: Vec<JsonStream<'a>>,
    curves: Vec<JsonCurve<'a>>,
    failures: &'a [StreamFailure],
}

/// Everything one stream contributes to the machine report.
#[derive(Debug, Clone)]
pub struct StreamDetail {
    pub path: String,
    pub summary: StreamSummary,
    pub frames: Vec<FrameScore>,
    pub diagnostics: Vec<FrameDiagnostics>,
}

pub struct ModelInfo<'a> {
    pub settings: &'a SettingsBlock,
    pub corpus_descriptor: &'a str,
    pub sample_count: usize,
}

pub fn write_measure_json<W: Write>(
    mut out: W,
    model: &ModelInfo<'_>,
    streams: &[StreamDetail],
    curves: &[RdCurve],
    failures: &[StreamFailure],
) -> Result<()> {
    let mut sorted: Vec<&StreamDetail> = streams.iter().collect();
    sorted.sort_by(|a, b| (&a.summary.key, a.summary.bitrate_kbps).cmp(&(&b.summary.key, b.summary.bitrate_kbps)));
    let report = JsonMeasureReport {
        model: JsonModel {
            settings_hash: model.settings.hash(),
            settings: model.settings,
            corpus_descriptor: model.corpus_descriptor,
            sample_count: model.sample_count,
        },
        streams: sorted
            .into_iter()
            .map(|s| JsonStream {
                video_id: &s.summary.key.video_id,
                encoder_id: &s.summary.key.encoder_id,
                use_case: &s.summary.key.use_case,
                bitrate_kbps: s.summary.bitrate_kbps,
                path: &s.path,
                weighted: (&s.summary.weighted).into(),
                mean: (&s.summary.mean).into(),
                violations: s.summary.violations,
                frames: s
                    .frames
                    .iter()
                    .zip(&s.diagnostics)
                    .map(|(f, d)| JsonFrame {
                        frame_index: f.frame_index,
                        score: round9(f.score),
                        weight: round9(d.weight),
                        dark_frame: d.dark_frame,
                        outlier: d.outlier_score,
                        degenerate_frame: f.degenerate_frame,
                        covariance_fallback: f.covariance_fallback,
                        patch_count: f.patch_count,
                        mean_luma: round9(f.mean_luma),
                    })
                    .collect(),
            })
            .collect(),
        curves: json_curves(curves),
        failures,
    };
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct JsonRdReport<'a> {
    curves: Vec<JsonCurve<'a>>,
    violation_count: usize,
}

pub fn write_rd_json<W: Write>(mut out: W, curves: &[RdCurve]) -> Result<()> {
    let report =
        JsonRdReport { curves: json_curves(curves), violation_count: curves.iter().map(|c| c.violations.len()).sum() };
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct JsonCorrelation<'a> {
    video_id: &'a str,
    points: usize,
    r: f64,
}

#[derive(Debug, Serialize)]
struct JsonCorrelationReport<'a> {
    per_video: Vec<JsonCorrelation<'a>>,
    skipped: &'a [crate::analysis::SkippedVideo],
    average_r: f64,
}

pub fn write_correlation_json<W: Write>(mut out: W, report: &CorrelationReport) -> Result<()> {
    let json = JsonCorrelationReport {
        per_video: report
            .per_video
            .iter()
            .map(|v| JsonCorrelation { video_id: &v.video_id, points: v.points, r: round9(v.r) })
            .collect(),
        skipped: &report.skipped,
        average_r: round9(report.average_r),
    };
    serde_json::to_writer_pretty(&mut out, &json)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)
}
