//! Batch measurement of a manifest against a trained model.
//!
//! Streams are measured concurrently and the frames of each stream are
//! scored concurrently, all inside one thread pool sized by the job count.
//! Results are collected in manifest and frame order, so the outputs do not
//! depend on the number of threads.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nrvq_core::niqe::score_frame;
use nrvq_core::pooling::{diagnose_frames, pool_mean, pool_weighted};
use nrvq_core::{FrameScore, LumaPlane, NiqeModel};
use rayon::prelude::*;

use crate::analysis::{build_rd_curves, RdCurve, StreamRecord};
use crate::manifest::{GeometryDefaults, Manifest, StreamFormat};
use crate::model_file::SettingsBlock;
use crate::report::{self, ModelInfo, StreamDetail, StreamFailure, StreamSummary};
use crate::video::{open_raw_yuv, open_y4m, VideoError};

/// Frames decoded before a parallel scoring pass.
const CHUNK_FRAMES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// The stream content or metadata broke the input contract.
    Input,
    /// The environment failed (missing file, permission, read error).
    Io,
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub kind: FailureKind,
    pub record: StreamFailure,
}

#[derive(Debug, Clone)]
pub struct MeasureOutcome {
    pub streams: Vec<StreamDetail>,
    pub failures: Vec<Failure>,
    pub curves: Vec<RdCurve>,
}

impl MeasureOutcome {
    pub fn all_failed(&self) -> bool {
        self.streams.is_empty() && !self.failures.is_empty()
    }
}

fn read_all_scores<I>(frames: I, model: &NiqeModel) -> Result<Vec<FrameScore>, (FailureKind, String)>
where
    I: Iterator<Item = Result<LumaPlane, VideoError>>,
{
    let classify = |e: VideoError| (if e.is_io() { FailureKind::Io } else { FailureKind::Input }, e.to_string());
    let mut frames = frames.peekable();
    let mut scores = Vec::new();
    while frames.peek().is_some() {
        let chunk = frames.by_ref().take(CHUNK_FRAMES).collect::<Result<Vec<_>, _>>().map_err(classify)?;
        let base = scores.len();
        let scored: Vec<FrameScore> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, plane)| {
                score_frame(plane, model).map(|mut s| {
                    s.frame_index = base + i;
                    s
                })
            })
            .collect::<Result<_, _>>()
            .map_err(|e| (FailureKind::Input, format!("frame scoring failed: {e}")))?;
        scores.extend(scored);
    }
    Ok(scores)
}

fn measure_one(
    manifest: &Manifest,
    index: usize,
    defaults: &GeometryDefaults,
    model: &NiqeModel,
) -> Result<StreamDetail, (FailureKind, String)> {
    let entry = &manifest.streams[index];
    let path = manifest.resolve(entry);
    let scores = match entry.format {
        StreamFormat::Y4m => {
            let reader = open_y4m(&path).map_err(|e| open_error(&path, e))?;
            read_all_scores(reader, model)?
        }
        StreamFormat::Raw => {
            let geometry = manifest.raw_geometry(index, defaults).map_err(|e| (FailureKind::Input, e.to_string()))?;
            let reader = open_raw_yuv(&path, geometry).map_err(|e| open_error(&path, e))?;
            read_all_scores(reader, model)?
        }
    };
    if scores.is_empty() {
        return Err((FailureKind::Input, "stream has no frames".into()));
    }
    let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let weighted = pool_weighted(&values).map_err(|e| (FailureKind::Input, e.to_string()))?;
    let mean = pool_mean(&values).map_err(|e| (FailureKind::Input, e.to_string()))?;
    let diagnostics = diagnose_frames(&scores);
    Ok(StreamDetail {
        path: entry.path.clone(),
        summary: StreamSummary { key: entry.key(), bitrate_kbps: entry.bitrate_kbps, weighted, mean, violations: 0 },
        frames: scores,
        diagnostics,
    })
}

fn open_error(path: &Path, e: VideoError) -> (FailureKind, String) {
    let kind = if e.is_io() { FailureKind::Io } else { FailureKind::Input };
    (kind, format!("{}: {e}", path.display()))
}

/// Measures every manifest stream. Must be called inside the thread pool
/// that should bound the work.
pub fn measure(manifest: &Manifest, model: &NiqeModel, defaults: &GeometryDefaults) -> MeasureOutcome {
    let results: Vec<_> =
        (0..manifest.streams.len()).into_par_iter().map(|i| measure_one(manifest, i, defaults, model)).collect();

    let mut streams = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in manifest.streams.iter().zip(results) {
        match result {
            Ok(detail) => streams.push(detail),
            Err((kind, error)) => failures.push(Failure {
                kind,
                record: StreamFailure {
                    video_id: entry.video_id.clone(),
                    encoder_id: entry.encoder_id.clone(),
                    use_case: entry.use_case.clone(),
                    bitrate_kbps: entry.bitrate_kbps,
                    path: entry.path.clone(),
                    error,
                },
            }),
        }
    }

    let records: Vec<StreamRecord> = streams
        .iter()
        .map(|s| StreamRecord {
            key: s.summary.key.clone(),
            bitrate_kbps: s.summary.bitrate_kbps,
            pooled: s.summary.weighted,
        })
        .collect();
    // Keys are unique after manifest validation.
    let curves = build_rd_curves(&records).expect("validated manifest");
    for s in &mut streams {
        s.summary.violations = curves
            .iter()
            .filter(|c| c.key == s.summary.key)
            .flat_map(|c| &c.violations)
            .filter(|v| v.higher_kbps == s.summary.bitrate_kbps)
            .count();
    }
    MeasureOutcome { streams, failures, curves }
}

/// Runs [`measure`] in a dedicated pool of `jobs` threads.
pub fn measure_with_jobs(
    manifest: &Manifest,
    model: &NiqeModel,
    defaults: &GeometryDefaults,
    jobs: usize,
) -> io::Result<MeasureOutcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(io::Error::other)?;
    Ok(pool.install(|| measure(manifest, model, defaults)))
}

/// File name for a stream's per-frame CSV.
pub fn frame_csv_name(s: &StreamSummary) -> String {
    let clean = |t: &str| -> String {
        t.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.') { c } else { '_' }).collect()
    };
    format!(
        "{}__{}__{}__{}.csv",
        clean(&s.key.video_id),
        clean(&s.key.encoder_id),
        clean(&s.key.use_case),
        s.bitrate_kbps
    )
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `summary.csv`, `failures.csv`, `report.json` and
/// `frames/<stream>.csv` below `out_dir`. Returns the files written.
pub fn write_outputs(
    out_dir: &Path,
    outcome: &MeasureOutcome,
    model: &NiqeModel,
) -> Result<Vec<PathBuf>, report::ReportError> {
    let mut written = Vec::new();
    let mut emit = |name: PathBuf, f: &dyn Fn(&mut BufWriter<File>) -> report::Result<()>| -> report::Result<()> {
        let path = out_dir.join(&name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush()?;
        written.push(path);
        Ok(())
    };

    for s in &outcome.streams {
        emit(Path::new("frames").join(frame_csv_name(&s.summary)), &|w| {
            report::write_frame_csv(w, &s.frames, &s.diagnostics)
        })?;
    }
    let summaries: Vec<StreamSummary> = outcome.streams.iter().map(|s| s.summary.clone()).collect();
    emit("summary.csv".into(), &|w| report::write_summary_csv(w, &summaries))?;
    let failures: Vec<StreamFailure> = outcome.failures.iter().map(|f| f.record.clone()).collect();
    emit("failures.csv".into(), &|w| report::write_failures_csv(w, &failures))?;

    let settings = SettingsBlock::from_model(model);
    let info = ModelInfo {
        settings: &settings,
        corpus_descriptor: model.corpus_descriptor(),
        sample_count: model.mvg().sample_count(),
    };
    emit("report.json".into(), &|w| {
        report::write_measure_json(w, &info, &outcome.streams, &outcome.curves, &failures)
    })?;
    Ok(written)
}
