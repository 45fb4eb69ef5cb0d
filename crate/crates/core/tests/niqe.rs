use nrvq_core::image::{mscn, RealField};
use nrvq_core::niqe::{
    extract_patch_features, score_frame, select_sharp_patches, train_model, DEGENERATE_FRAME_SCORE, FEATURE_DIM,
};
use nrvq_core::{Error, LumaPlane, NiqeSettings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_plane(w: usize, h: usize, sd: f64, seed: u64) -> LumaPlane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(128.0, sd).unwrap();
    LumaPlane::from_fn(w, h, |_, _| n.sample(&mut rng).round().clamp(0.0, 255.0) as u8).unwrap()
}

#[test]
fn unit_variance_noise_patch_has_gaussian_shape() {
    // At unit variance the stabilizing constant dominates the local deviation,
    // so the MSCN field keeps the Gaussian shape of the input. Higher-contrast
    // white noise self-normalizes into a lighter-tailed field (alpha near 3).
    for seed in 0..5 {
        let plane = gaussian_plane(96, 96, 1.0, seed);
        let f = extract_patch_features(&plane, (0, 0), 96).unwrap();
        assert_eq!(f.0.len(), FEATURE_DIM);
        assert!(f.0.iter().all(|v| v.is_finite()));
        assert!((f.0[0] - 2.0).abs() < 0.3, "seed {seed}: alpha {}", f.0[0]);
    }
}

#[test]
fn constant_patch_is_degenerate() {
    let plane = LumaPlane::filled(96, 96, 77).unwrap();
    assert!(matches!(extract_patch_features(&plane, (0, 0), 96), Err(Error::DegenerateInput(_))));
}

#[test]
fn patch_out_of_bounds() {
    let plane = gaussian_plane(128, 128, 20.0, 2);
    assert!(matches!(extract_patch_features(&plane, (64, 0), 96), Err(Error::PatchOutOfBounds { .. })));
    assert!(extract_patch_features(&plane, (32, 32), 96).is_ok());
}

#[test]
fn uniform_sharpness_keeps_every_tile() {
    let sigma = RealField { width: 300, height: 200, values: vec![2.5; 60_000] };
    let tiles = select_sharp_patches(&sigma, 96, 0.75).unwrap();
    assert_eq!(tiles, vec![(0, 0), (96, 0), (192, 0), (0, 96), (96, 96), (192, 96)]);
}

#[test]
fn noisy_quadrant_selects_only_its_tiles() {
    let noise = gaussian_plane(384, 384, 30.0, 3);
    let plane = LumaPlane::from_fn(384, 384, |x, y| if x < 192 && y < 192 { noise.get(x, y) } else { 128 }).unwrap();
    let field = mscn(&plane).unwrap();
    let got = select_sharp_patches(&field.sigma, 96, 0.75).unwrap();

    // Brute-force ranking oracle.
    let mut tiles = Vec::new();
    for ty in 0..4 {
        for tx in 0..4 {
            let mut s = 0.0;
            for y in ty * 96..(ty + 1) * 96 {
                for x in tx * 96..(tx + 1) * 96 {
                    s += field.sigma.get(x, y);
                }
            }
            tiles.push(((tx * 96, ty * 96), s / 9216.0));
        }
    }
    let max = tiles.iter().map(|t| t.1).fold(0.0, f64::max);
    let want: Vec<_> = tiles.iter().filter(|t| t.1 >= 0.75 * max).map(|t| t.0).collect();
    assert_eq!(got, want);
    assert_eq!(got, vec![(0, 0), (96, 0), (0, 96), (96, 96)]);
}

#[test]
fn selection_always_contains_the_sharpest_tile() {
    // Smooth ramp of sharpness; only the top tiles survive a strict fraction.
    let (w, h) = (480, 96);
    let values = (0..w * h).map(|k| (k % w) as f64).collect();
    let sigma = RealField { width: w, height: h, values };
    let tiles = select_sharp_patches(&sigma, 96, 1.0).unwrap();
    assert_eq!(tiles, vec![(384, 0)]);
}

#[test]
fn plane_smaller_than_patch() {
    let sigma = RealField { width: 95, height: 95, values: vec![1.0; 95 * 95] };
    assert!(matches!(select_sharp_patches(&sigma, 96, 0.75), Err(Error::NoPatchesFit { .. })));

    let corpus = [gaussian_plane(384, 384, 30.0, 4)];
    let model = train_model(&corpus, NiqeSettings { patch_size: 48, sharpness_fraction: 0.75 }).unwrap();
    let small = gaussian_plane(40, 40, 30.0, 5);
    assert!(matches!(score_frame(&small, &model), Err(Error::NoPatchesFit { .. })));
}

#[test]
fn training_count_and_degeneracy_errors() {
    let single = [gaussian_plane(96, 96, 30.0, 6)];
    assert_eq!(
        train_model(&single, NiqeSettings::default()).unwrap_err(),
        Error::InsufficientPatches { found: 1, required: 37 }
    );
    let flat = vec![LumaPlane::filled(384, 384, 0).unwrap(); 10];
    assert!(matches!(train_model(&flat, NiqeSettings::default()), Err(Error::DegenerateInput(_))));
    assert!(matches!(train_model(&[], NiqeSettings::default()), Err(Error::InsufficientPatches { found: 0, .. })));
}

#[test]
fn settings_are_validated() {
    let corpus = [gaussian_plane(192, 192, 30.0, 7)];
    for bad in [
        NiqeSettings { patch_size: 95, sharpness_fraction: 0.75 },
        NiqeSettings { patch_size: 16, sharpness_fraction: 0.75 },
        NiqeSettings { patch_size: 96, sharpness_fraction: 0.0 },
        NiqeSettings { patch_size: 96, sharpness_fraction: 1.5 },
    ] {
        assert!(matches!(train_model(&corpus, bad), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn black_frame_gets_sentinel_score() {
    let corpus: Vec<_> = (0..4).map(|s| gaussian_plane(384, 384, 30.0, 100 + s)).collect();
    let model = train_model(&corpus, NiqeSettings { patch_size: 48, ..Default::default() }).unwrap();
    let black = LumaPlane::filled(384, 384, 0).unwrap();
    let s = score_frame(&black, &model).unwrap();
    assert!(s.degenerate_frame);
    assert_eq!(s.score, DEGENERATE_FRAME_SCORE);
    assert_eq!(s.patch_count, 0);
    assert_eq!(s.mean_luma, 0.0);

    let fresh = score_frame(&gaussian_plane(384, 384, 30.0, 999), &model).unwrap();
    assert!(!fresh.degenerate_frame);
    assert!(fresh.score >= 0.0 && fresh.score < DEGENERATE_FRAME_SCORE);
    assert!(fresh.patch_count >= 1);
    // 64 tiles of 48 px: enough for a frame covariance.
    assert!(!fresh.covariance_fallback);
}
