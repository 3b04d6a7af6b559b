mod common;

use common::*;
use dasc_core::dasc::{compute_dasc, compute_dasc_raw, DascParams};
use dasc_core::eaf::Weighting;
use dasc_core::image::{shift_image, Image};
use dasc_core::lss::{compute_lss, LssParams};
use dasc_core::oracle::{asymmetric_correlation, compute_dasc_oracle, kernel_weights};
use proptest::prelude::*;

#[test]
fn efficient_path_matches_asymmetric_oracle() {
    let params = DascParams::default();
    for seed in 0..10 {
        let img = random_image(32, 32, 100 + seed);
        let pats = default_patterns(16, seed);
        let fast = compute_dasc(&img, &pats, &params).unwrap();
        let slow = compute_dasc_oracle(&img, &pats, &params, false).unwrap();
        let diff = fast.max_abs_diff(&slow);
        assert!(diff <= 1e-4, "seed {seed}: {diff}");
    }
}

#[test]
fn efficient_path_matches_oracle_for_every_weighting() {
    for (k, weighting) in [Weighting::Box, Weighting::Gaussian, Weighting::default()]
        .into_iter()
        .enumerate()
    {
        let params = DascParams {
            weighting,
            ..DascParams::default()
        };
        let img = texture(40, 36, 1.0, 7 + k as u64);
        let pats = compact_patterns(24, k as u64);
        let fast = compute_dasc(&img, &pats, &params).unwrap();
        let slow = compute_dasc_oracle(&img, &pats, &params, false).unwrap();
        assert!(fast.max_abs_diff(&slow) <= 1e-4, "{}", weighting.name());
    }
}

#[test]
fn symmetric_and_asymmetric_fields_are_close_but_distinct() {
    let img = texture(64, 64, 1.5, 3);
    let pats = default_patterns(32, 1);
    let params = DascParams::default();
    let asym = compute_dasc_oracle(&img, &pats, &params, false).unwrap();
    let sym = compute_dasc_oracle(&img, &pats, &params, true).unwrap();
    let n = asym.values().len() as f64;
    let mad: f64 = asym
        .values()
        .iter()
        .zip(sym.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n;
    eprintln!("symmetric vs asymmetric mean abs difference: {mad:.4}");
    assert!(mad > 0.0 && mad < 0.1);
}

#[test]
fn raw_values_respect_truncation_bounds() {
    let params = DascParams::default();
    let f = compute_dasc_raw(&random_image(40, 40, 9), &default_patterns(64, 2), &params).unwrap();
    assert!(f
        .values()
        .iter()
        .all(|&v| v >= params.tau_c - 1e-12 && v <= 1.0 + 1e-12));
}

/// Direct LSS: for each pixel and displacement, the patch SSD from explicit
/// replicate-padded lookups, max-pooled into the bin.
fn naive_lss(img: &Image, p: &LssParams) -> Vec<f64> {
    let radius = (p.window_size / 2) as isize;
    let pr = (p.patch_size / 2) as isize;
    let radii = dasc_core::lss::lss_bin_radii(p.n_rho, radius as usize);
    let dim = p.n_rho * p.n_theta;
    let mut out = Vec::new();
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut cell = vec![0.0f64; dim];
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let Some(b) = dasc_core::lss::lss_bin(dx, dy, &radii, p.n_theta) else {
                        continue;
                    };
                    let mut ssd = 0.0;
                    for qy in -pr..=pr {
                        for qx in -pr..=pr {
                            let sx = (x + qx).clamp(0, img.width() as isize - 1);
                            let sy = (y + qy).clamp(0, img.height() as isize - 1);
                            let a = img.get(sx as usize, sy as usize);
                            let t = img.get_clamped(sx + dx, sy + dy);
                            ssd += (a - t) * (a - t);
                        }
                    }
                    cell[b] = cell[b].max((-ssd / p.sigma_s).exp());
                }
            }
            out.extend(cell);
        }
    }
    out
}

#[test]
fn lss_matches_naive_reference() {
    let img = random_image(24, 24, 12);
    let p = LssParams {
        window_size: 15,
        ..LssParams::default()
    };
    let fast = compute_lss(&img, &p).unwrap();
    let slow = naive_lss(&img, &p);
    let diff = fast
        .values()
        .iter()
        .zip(&slow)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-10, "{diff}");
}

#[test]
fn translation_moves_the_field() {
    let img = texture(48, 48, 1.0, 4);
    let pats = compact_patterns(16, 3);
    let params = DascParams::default();
    let a = compute_dasc(&img, &pats, &params).unwrap();
    let b = compute_dasc(&shift_image(&img, [3, 2]), &pats, &params).unwrap();
    // b(x, y) = a(x + 3, y + 2) away from the padded border
    for y in 14..30 {
        for x in 14..30 {
            let (pa, pb) = (a.get(x + 3, y + 2), b.get(x, y));
            let d = pa.iter().zip(pb).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(d < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn box_descriptor_ignores_affine_intensity(seed in 0u64..10_000, a in 0.1f64..3.0, b in -1.0f64..1.0, neg in any::<bool>()) {
        let params = DascParams { weighting: Weighting::Box, ..DascParams::default() };
        let img = random_image(28, 28, seed);
        let scale = if neg { -a } else { a };
        let mapped = img.map(|v| scale * v + b);
        let pats = compact_patterns(12, seed);
        let f = compute_dasc(&img, &pats, &params).unwrap();
        let g = compute_dasc(&mapped, &pats, &params).unwrap();
        prop_assert!(f.max_abs_diff(&g) <= 1e-8);
    }

    #[test]
    fn correlation_magnitude_is_bounded(seed in 0u64..10_000, x in 0usize..20, y in 0usize..20, dx in -6isize..=6, dy in -6isize..=6) {
        let img = random_image(20, 20, seed);
        for weighting in [Weighting::Box, Weighting::Gaussian, Weighting::default()] {
            let k = kernel_weights(&img, weighting, 2, x, y);
            let psi = asymmetric_correlation(&img, &k, [dx, dy]);
            prop_assert!(psi.abs() <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn efficient_equals_oracle_on_random_input(seed in 0u64..10_000, w in 16usize..40, h in 16usize..40) {
        let img = random_image(w, h, seed);
        let pats = compact_patterns(8, seed);
        let params = DascParams::default();
        let fast = compute_dasc(&img, &pats, &params).unwrap();
        let slow = compute_dasc_oracle(&img, &pats, &params, false).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) <= 1e-4);
    }
}
