//! Command-line front end.
//!
//! Exit codes: 0 on success (including partial batch failure), 2 when an
//! input breaks its contract, 3 on environment or IO errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use nrvq_core::niqe::{frame_features, train_from_features, DEFAULT_PATCH_SIZE, DEFAULT_SHARPNESS_FRACTION};
use nrvq_core::{LumaPlane, NiqeSettings};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analysis::{build_rd_curves, correlate_with_subjective, StreamRecord};
use crate::manifest::{GeometryDefaults, Manifest};
use crate::measure::{measure_with_jobs, write_outputs, FailureKind};
use crate::model_file::{self, ModelFileError};
use crate::report::{self, ScoreChoice};
use crate::video::{read_frames, read_pgm, VideoError};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    fn input(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_INPUT, error: error.into() }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: EXIT_IO, error: error.into() }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nrvq", version, about = "No-reference video quality measurement for codec comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Weighted,
    Mean,
}

impl From<ScoreArg> for ScoreChoice {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::Weighted => ScoreChoice::Weighted,
            ScoreArg::Mean => ScoreChoice::Mean,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a pristine model from a directory of PGM/Y4M sources.
    Train {
        corpus_dir: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
        patch_size: usize,
        #[arg(long, default_value_t = DEFAULT_SHARPNESS_FRACTION)]
        sharpness_fraction: f64,
        #[arg(long, env = "NRVQ_JOBS")]
        jobs: Option<usize>,
    },
    /// Score every stream of a manifest and write per-frame and pooled reports.
    Measure {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest's model path.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides the manifest's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, env = "NRVQ_JOBS")]
        jobs: Option<usize>,
        /// Default width for raw YUV entries.
        #[arg(long)]
        width: Option<usize>,
        /// Default height for raw YUV entries.
        #[arg(long)]
        height: Option<usize>,
        /// Default frame rate for raw YUV entries, `num/den` or an integer.
        #[arg(long)]
        fps: Option<String>,
    },
    /// Build rate-distortion curves from a summary and report non-monotonic pairs.
    Rd {
        summary: PathBuf,
        /// Defaults to the summary's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScoreArg::Weighted)]
        score: ScoreArg,
    },
    /// Correlate pooled scores with subjective scores per video.
    Correlate {
        summary: PathBuf,
        subjective: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScoreArg::Weighted)]
        score: ScoreArg,
    },
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Train { corpus_dir, model, patch_size, sharpness_fraction, jobs } => {
            cmd_train(&corpus_dir, &model, NiqeSettings { patch_size, sharpness_fraction }, jobs)
        }
        Command::Measure { manifest, model, out_dir, jobs, width, height, fps } => {
            cmd_measure(&manifest, model, out_dir, jobs, GeometryDefaults { width, height, fps })
        }
        Command::Rd { summary, out_dir, score } => cmd_rd(&summary, out_dir, score.into()),
        Command::Correlate { summary, subjective, out_dir, score } => {
            cmd_correlate(&summary, &subjective, out_dir, score.into())
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(CliError::io)
}

fn video_error(path: &Path, e: VideoError) -> CliError {
    let err = anyhow!("{}: {e}", path.display());
    if e.is_io() {
        CliError::io(err)
    } else {
        CliError::input(err)
    }
}

fn is_source(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("y4m"))
}

/// Sorted PGM/Y4M paths directly inside `dir`.
fn corpus_sources(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let read_err = |e: io::Error| CliError::io(anyhow!("{}: {e}", dir.display()));
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(read_err)? {
        let path = entry.map_err(read_err)?.path();
        if is_source(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn load_source(path: &Path) -> CliResult<(Vec<u8>, Vec<LumaPlane>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(anyhow!("{}: {e}", path.display())))?;
    let is_pgm = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let planes = if is_pgm {
        vec![read_pgm(&bytes[..]).map_err(|e| video_error(path, e))?]
    } else {
        read_frames(&bytes[..]).map_err(|e| video_error(path, e))?.frames
    };
    Ok((bytes, planes))
}

fn cmd_train(corpus_dir: &Path, model_path: &Path, settings: NiqeSettings, jobs: Option<usize>) -> CliResult {
    settings.validate().map_err(CliError::input)?;
    let sources = corpus_sources(corpus_dir)?;
    if sources.is_empty() {
        return Err(CliError::input(anyhow!("{}: no PGM or Y4M sources", corpus_dir.display())));
    }

    let mut hasher = Sha256::new();
    let mut planes = Vec::new();
    for path in &sources {
        let (bytes, frames) = load_source(path)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
        planes.extend(frames);
    }
    let corpus_hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    let features = pool(jobs.unwrap_or_else(default_jobs))?
        .install(|| planes.par_iter().map(|p| frame_features(p, &settings)).collect::<Result<Vec<_>, _>>())
        .map_err(|e| CliError::input(anyhow!("{}: {e}", corpus_dir.display())))?;
    let descriptor = format!("sha256:{corpus_hash} ({} files, {} frames)", sources.len(), planes.len());
    let model = train_from_features(features, settings, descriptor)
        .map_err(|e| CliError::input(anyhow!("{}: {e}", corpus_dir.display())))?;

    model_file::save(&model, model_path).map_err(|e| CliError::io(anyhow!("{}: {e}", model_path.display())))?;
    println!(
        "trained on {} frames from {} files: {} patches, corpus sha256 {corpus_hash}",
        planes.len(),
        sources.len(),
        model.mvg().sample_count()
    );
    Ok(())
}

fn load_model(path: &Path) -> CliResult<nrvq_core::NiqeModel> {
    model_file::load(path).map_err(|e| {
        let err = anyhow!("{}: {e}", path.display());
        if matches!(e, ModelFileError::Io(_)) {
            CliError::io(err)
        } else {
            CliError::input(err)
        }
    })
}

fn cmd_measure(
    manifest_path: &Path,
    model: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
    defaults: GeometryDefaults,
) -> CliResult {
    let manifest = Manifest::load(manifest_path).map_err(|e| {
        let err = anyhow!("{}: {e}", manifest_path.display());
        if e.is_io() {
            CliError::io(err)
        } else {
            CliError::input(err)
        }
    })?;
    let from_manifest = |p: &Option<String>| p.as_ref().map(|p| manifest.base_dir.join(p));
    let model_path = model
        .or_else(|| from_manifest(&manifest.model))
        .ok_or_else(|| CliError::input(anyhow!("no model given by --model or the manifest")))?;
    let out_dir = out_dir
        .or_else(|| from_manifest(&manifest.out_dir))
        .ok_or_else(|| CliError::input(anyhow!("no output directory given by --out-dir or the manifest")))?;
    let jobs = jobs.or(manifest.jobs).unwrap_or_else(default_jobs);
    let model = load_model(&model_path)?;

    let outcome = measure_with_jobs(&manifest, &model, &defaults, jobs).map_err(CliError::io)?;
    write_outputs(&out_dir, &outcome, &model).map_err(|e| CliError::io(anyhow!("{}: {e}", out_dir.display())))?;

    for f in &outcome.failures {
        let r = &f.record;
        eprintln!("failed {}/{}/{} @ {} kbps: {}", r.video_id, r.encoder_id, r.use_case, r.bitrate_kbps, r.error);
    }
    println!("measured {} of {} streams into {}", outcome.streams.len(), manifest.streams.len(), out_dir.display());
    if outcome.all_failed() {
        let code = if outcome.failures.iter().all(|f| f.kind == FailureKind::Io) { EXIT_IO } else { EXIT_INPUT };
        return Err(CliError { code, error: anyhow!("every stream failed") });
    }
    Ok(())
}

fn read_summary(path: &Path, choice: ScoreChoice) -> CliResult<Vec<StreamRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(anyhow!("{}: {e}", path.display())))?;
    let rows = report::read_summary_csv(file).map_err(|e| classify_report(path, e))?;
    Ok(rows.iter().map(|r| r.to_record(choice)).collect())
}

fn classify_report(path: &Path, e: report::ReportError) -> CliError {
    let io = match &e {
        report::ReportError::Io(_) => true,
        report::ReportError::Csv(c) => c.is_io_error(),
        report::ReportError::Json(_) => false,
    };
    let err = anyhow!("{}: {e}", path.display());
    if io {
        CliError::io(err)
    } else {
        CliError::input(err)
    }
}

fn output_dir(out_dir: Option<PathBuf>, input: &Path) -> PathBuf {
    out_dir.unwrap_or_else(|| input.parent().map(Path::to_owned).unwrap_or_default())
}

fn write_output(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> report::Result<()>) -> CliResult<PathBuf> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::io(anyhow!("{name}: {e}")))?;
    let path = dir.join(name);
    report::write_file(&path, &buf).map_err(|e| CliError::io(anyhow!("{}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_rd(summary: &Path, out_dir: Option<PathBuf>, choice: ScoreChoice) -> CliResult {
    let records = read_summary(summary, choice)?;
    let curves = build_rd_curves(&records).map_err(|e| CliError::input(anyhow!("{}: {e}", summary.display())))?;
    let dir = output_dir(out_dir, summary);
    write_output(&dir, "rd_curves.csv", |w| report::write_rd_csv(w, &curves))?;
    write_output(&dir, "plot_data.csv", |w| report::write_plot_csv(w, &curves))?;
    write_output(&dir, "violations.csv", |w| report::write_violations_csv(w, &curves))?;

    let mut out = io::stdout().lock();
    let violations: usize = curves.iter().map(|c| c.violations.len()).sum();
    let _ = writeln!(out, "{} curves, {violations} monotonicity violations", curves.len());
    for c in &curves {
        for v in &c.violations {
            let _ = writeln!(
                out,
                "  {}: {} -> {} kbps, score {} -> {} (+{})",
                c.key,
                v.lower_kbps,
                v.higher_kbps,
                report::fmt_sig9(v.lower_score),
                report::fmt_sig9(v.higher_score),
                report::fmt_sig9(v.delta)
            );
        }
    }
    Ok(())
}

fn cmd_correlate(summary: &Path, subjective: &Path, out_dir: Option<PathBuf>, choice: ScoreChoice) -> CliResult {
    let records = read_summary(summary, choice)?;
    let file = fs::File::open(subjective).map_err(|e| CliError::io(anyhow!("{}: {e}", subjective.display())))?;
    let rows = report::read_subjective_csv(file).map_err(|e| classify_report(subjective, e))?;
    let result = correlate_with_subjective(&records, &rows).map_err(CliError::input)?;
    let dir = output_dir(out_dir, summary);
    write_output(&dir, "correlation.json", |w| report::write_correlation_json(w, &result))?;

    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{:<24} {:>6} {:>12}", "video_id", "points", "pearson_r");
    for v in &result.per_video {
        let _ = writeln!(out, "{:<24} {:>6} {:>12}", v.video_id, v.points, report::fmt_sig9(v.r));
    }
    for s in &result.skipped {
        let _ = writeln!(out, "{:<24} {:>6} {:>12}  ({})", s.video_id, s.points, "-", s.reason);
    }
    let _ = writeln!(out, "average r = {}", report::fmt_sig9(result.average_r));
    Ok(())
}
