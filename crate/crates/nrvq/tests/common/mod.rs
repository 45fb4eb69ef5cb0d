//! Synthetic content shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nrvq::video::{write_pgm, write_y4m, VideoGeometry};
use nrvq_core::LumaPlane;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const FRAME_SIDE: usize = 384;

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::default(); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = data[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            data[y * n + x] = col[y];
        }
    }
}

/// Gaussian field of side `n` with a 1/f amplitude spectrum, standardized to
/// zero mean and unit variance.
pub fn pink_field(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<Complex<f64>> = (0..n * n).map(|_| Complex::new(StandardNormal.sample(&mut rng), 0.0)).collect();
    fft2(&mut data, n, false);
    let freq = |k: usize| if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    for y in 0..n {
        for x in 0..n {
            let f = freq(x).hypot(freq(y));
            data[y * n + x] *= if f == 0.0 { 0.0 } else { 1.0 / f };
        }
    }
    fft2(&mut data, n, true);
    let re: Vec<f64> = data.iter().map(|c| c.re).collect();
    let mean = re.iter().sum::<f64>() / re.len() as f64;
    let sd = (re.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / re.len() as f64).sqrt();
    re.into_iter().map(|v| (v - mean) / sd).collect()
}

/// Seeded naturalistic frame: 1/f noise mapped to 8-bit luma around mid-grey.
pub fn pink_frame(seed: u64) -> LumaPlane {
    pink_frame_sized(seed, FRAME_SIDE)
}

pub fn pink_frame_sized(seed: u64, n: usize) -> LumaPlane {
    let field = pink_field(seed, n);
    LumaPlane::from_fn(n, n, |x, y| (128.0 + 40.0 * field[y * n + x]).round().clamp(0.0, 255.0) as u8).unwrap()
}

/// 9×9 box blur with edge replication.
pub fn blur9(plane: &LumaPlane) -> LumaPlane {
    let (w, h) = (plane.width(), plane.height());
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        u32::from(plane.get(x, y))
    };
    LumaPlane::from_fn(w, h, |x, y| {
        let mut sum = 0;
        for dy in -4..=4 {
            for dx in -4..=4 {
                sum += at(x as isize + dx, y as isize + dy);
            }
        }
        ((sum + 40) / 81) as u8
    })
    .unwrap()
}

/// Adds seeded Gaussian noise of standard deviation `sigma` luma levels.
pub fn add_noise(plane: &LumaPlane, sigma: f64, seed: u64) -> LumaPlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = plane
        .samples()
        .iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            (f64::from(v) + sigma * n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    LumaPlane::new(plane.width(), plane.height(), samples).unwrap()
}

pub fn write_pgm_file(path: &Path, plane: &LumaPlane) {
    let mut buf = Vec::new();
    write_pgm(&mut buf, plane).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub fn write_y4m_file(path: &Path, frames: &[LumaPlane]) {
    let g = VideoGeometry::new(frames[0].width(), frames[0].height(), 25, 1);
    let mut buf = Vec::new();
    write_y4m(&mut buf, &g, frames).unwrap();
    std::fs::write(path, buf).unwrap();
}

pub const GRID_VIDEOS: [&str; 2] = ["bay", "ridge"];
pub const GRID_ENCODERS: [&str; 2] = ["x264", "x265"];
pub const GRID_USE_CASES: [&str; 3] = ["fast", "universal", "ripping"];
pub const GRID_BITRATES: [u32; 7] = [500, 1000, 2000, 4000, 6000, 8000, 12000];

/// Stand-in for coding loss: noise that shrinks as the bitrate grows.
fn grid_noise(encoder: usize, use_case: usize, bitrate: usize) -> f64 {
    let base = [14.0, 10.0, 7.0, 5.0, 3.5, 2.5, 1.5][bitrate];
    base * (1.0 + 0.15 * encoder as f64 + 0.1 * use_case as f64)
}

/// Writes a desk-scale measurement grid of Y4M streams plus `manifest.json`
/// into `dir` and returns the manifest path. Each stream has `frames`
/// frames of `side`×`side` luma.
pub fn write_grid(dir: &Path, side: usize, frames: usize) -> PathBuf {
    let mut entries = Vec::new();
    for (vi, video) in GRID_VIDEOS.iter().enumerate() {
        let sources: Vec<LumaPlane> =
            (0..frames).map(|f| pink_frame_sized(500 + 10 * vi as u64 + f as u64, side)).collect();
        for (ei, encoder) in GRID_ENCODERS.iter().enumerate() {
            for (ui, use_case) in GRID_USE_CASES.iter().enumerate() {
                for (bi, bitrate) in GRID_BITRATES.iter().enumerate() {
                    let sigma = grid_noise(ei, ui, bi);
                    let seed = ((vi * 7 + ei) * 5 + ui) as u64 * 100 + bi as u64;
                    let stream: Vec<LumaPlane> =
                        sources.iter().enumerate().map(|(f, p)| add_noise(p, sigma, seed * 31 + f as u64)).collect();
                    let name = format!("{video}_{encoder}_{use_case}_{bitrate}.y4m");
                    write_y4m_file(&dir.join(&name), &stream);
                    entries.push(format!(
                        r#"    {{"path": "{name}", "video_id": "{video}", "encoder_id": "{encoder}", "use_case": "{use_case}", "bitrate_kbps": {bitrate}}}"#
                    ));
                }
            }
        }
    }
    let manifest = dir.join("manifest.json");
    std::fs::write(&manifest, format!("{{\n  \"streams\": [\n{}\n  ]\n}}\n", entries.join(",\n"))).unwrap();
    manifest
}

/// Lists every file below `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_owned(), std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
