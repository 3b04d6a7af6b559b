mod common;

use dasc_core::eaf::{FilterParams, Weighting, DEFAULT_EPSILON};
use dasc_core::image::Image;
use dasc_core::oracle::{kernel_weights, weighted_ssd};
use dasc_core::wmsd::{
    build_response_stack, detect_keypoints, detect_wmsd, orientation_histogram, response_map,
    self_dissimilarity, self_dissimilarity_raw, smallest_indices, wmsd_patterns, WmsdParams,
};
use proptest::prelude::*;

fn square_scene() -> Image {
    Image::from_fn(48, 48, |x, y| {
        if (20..29).contains(&x) && (20..29).contains(&y) {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn decomposition_matches_weighted_ssd_loop() {
    let patterns = wmsd_patterns(3, 12, 8).unwrap();
    let filter = FilterParams::default();
    for seed in 0..3 {
        let img = common::random_image(32, 32, 100 + seed);
        let raw = self_dissimilarity_raw(&img, &patterns, filter).unwrap();
        let clamped = self_dissimilarity(&img, &patterns, filter).unwrap();
        let mut max_diff: f64 = 0.0;
        for y in 0..32 {
            for x in 0..32 {
                let w = kernel_weights(&img, Weighting::Guided { epsilon: DEFAULT_EPSILON }, 2, x, y);
                for (l, pair) in patterns.pairs().iter().enumerate() {
                    let direct = weighted_ssd(&img, &w, pair.delta());
                    max_diff = max_diff.max((direct - raw[l].get(x, y)).abs());
                    max_diff = max_diff.max((direct.max(0.0) - clamped[l].get(x, y)).abs());
                }
            }
        }
        assert!(max_diff <= 1e-4, "seed {seed}: {max_diff}");
    }
}

#[test]
fn box_weighted_ssd_is_nonnegative() {
    // with nonnegative weights every term of the sum is a square
    let img = common::random_image(20, 20, 4);
    for (x, y) in [(0, 0), (10, 10), (19, 5)] {
        let w = kernel_weights(&img, Weighting::Box, 2, x, y);
        assert!(weighted_ssd(&img, &w, [3, -1]) >= 0.0);
    }
}

#[test]
fn clamped_dissimilarity_is_nonnegative() {
    let img = common::random_image(32, 32, 8);
    let p = wmsd_patterns(3, 12, 8).unwrap();
    let phi = self_dissimilarity(&img, &p, FilterParams::default()).unwrap();
    assert!(phi.iter().all(|m| m.data().iter().all(|&v| v >= 0.0)));
}

#[test]
fn square_yields_keypoint_near_center() {
    let kps = detect_wmsd(&square_scene(), &WmsdParams::default()).unwrap();
    assert!(!kps.is_empty());
    let nearest = kps
        .iter()
        .map(|k| (k.x as f64 - 24.0).hypot(k.y as f64 - 24.0))
        .fold(f64::INFINITY, f64::min);
    assert!(nearest <= 2.0, "nearest keypoint {nearest} px from center");
    assert!(kps.len() <= 48 * 48);
    let sigmas: Vec<f64> = (0..4).map(|k| 2f64.sqrt().powi(k)).collect();
    for k in &kps {
        assert!(sigmas.iter().any(|s| (s - k.rho).abs() < 1e-12));
        assert!((0.0..2.0 * std::f64::consts::PI).contains(&k.theta));
    }
}

#[test]
fn constant_image_detects_nothing() {
    let img = Image::filled(40, 40, 0.7).unwrap();
    assert!(detect_wmsd(&img, &WmsdParams::default()).unwrap().is_empty());
}

#[test]
fn full_o_sums_every_direction() {
    let img = common::random_image(24, 24, 2);
    let p = wmsd_patterns(3, 12, 8).unwrap();
    let phi = self_dissimilarity(&img, &p, FilterParams::default()).unwrap();
    let all = response_map(&phi, 36).unwrap();
    for i in [0, 100, 300, 575] {
        let direct: f64 = phi.iter().map(|m| m.data()[i]).sum();
        assert!((all.data()[i] - direct).abs() < 1e-12);
    }
}

#[test]
fn histogram_mass_is_sum_over_selected_directions() {
    let img = common::blob_scene(64, 64, 6, 3);
    let p = wmsd_patterns(3, 12, 8).unwrap();
    let phi = self_dissimilarity(&img, &p, FilterParams::default()).unwrap();
    for (x, y) in [(20, 20), (31, 40), (50, 12)] {
        let hist = orientation_histogram(&phi, &p, 12, 10, x, y);
        let values: Vec<f64> = phi.iter().map(|m| m.get(x, y)).collect();
        let expected: f64 = smallest_indices(&values, 10).iter().map(|&l| values[l]).sum();
        assert!((hist.iter().sum::<f64>() - expected).abs() < 1e-12);
    }
}

#[test]
fn orientation_follows_a_quarter_turn() {
    let a = common::blob_scene(128, 128, 10, 11);
    let b = a.rotate90();
    let ka = detect_wmsd(&a, &WmsdParams::default()).unwrap();
    let kb = detect_wmsd(&b, &WmsdParams::default()).unwrap();
    let (mut matched, mut good) = (0, 0);
    for k in &ka {
        // rotate90 sends (x, y) to (y, W - 1 - x)
        let (ex, ey) = (k.y as isize, 127 - k.x as isize);
        let m = kb
            .iter()
            .filter(|q| q.level == k.level)
            .find(|q| (q.x as isize - ex).abs() <= 1 && (q.y as isize - ey).abs() <= 1);
        if let Some(m) = m {
            matched += 1;
            let d = (k.theta - m.theta).to_degrees().rem_euclid(360.0);
            if (d - 90.0).abs() <= 30.0 + 1e-9 {
                good += 1;
            }
        }
    }
    assert!(matched >= 5, "only {matched} matches");
    assert!(good as f64 >= 0.8 * matched as f64, "{good}/{matched}");
}

#[test]
fn mirrored_scene_mirrors_keypoints() {
    let a = common::blob_scene(96, 96, 8, 5);
    let b = a.flip_horizontal();
    let params = WmsdParams::default();
    let stack_a = build_response_stack(&a, &params).unwrap();
    let stack_b = build_response_stack(&b, &params).unwrap();
    let pa: Vec<_> = detect_keypoints(&stack_a, &params)
        .iter()
        .map(|k| (95 - k.x, k.y, k.level))
        .collect();
    let pb: Vec<_> = detect_keypoints(&stack_b, &params)
        .iter()
        .map(|k| (k.x, k.y, k.level))
        .collect();
    for (la, lb) in stack_a.levels.iter().zip(&stack_b.levels) {
        let mirrored = la.omega.flip_horizontal();
        for (u, v) in mirrored.data().iter().zip(lb.omega.data()) {
            assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
        }
    }
    // strict maxima on near-flat plateaus may flip with rounding noise
    let common = pa.iter().filter(|p| pb.contains(p)).count();
    assert!(common as f64 >= 0.75 * pa.len().max(pb.len()) as f64, "{pa:?} {pb:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn response_grows_with_o(seed in 0u64..1000) {
        let img = common::random_image(16, 16, seed);
        let p = wmsd_patterns(2, 8, 5).unwrap();
        let phi = self_dissimilarity(&img, &p, FilterParams::default()).unwrap();
        let o1 = response_map(&phi, 1).unwrap();
        let o2 = response_map(&phi, 2).unwrap();
        for (a, b) in o1.data().iter().zip(o2.data()) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn response_is_translation_equivariant(seed in 0u64..1000, dx in 1usize..4, dy in 1usize..4) {
        let big = common::random_image(40, 40, seed);
        let a = big.crop(0, 0, 32, 32).unwrap();
        let b = big.crop(dx, dy, 32, 32).unwrap();
        let p = wmsd_patterns(2, 8, 4).unwrap();
        let f = FilterParams::default();
        let oa = response_map(&self_dissimilarity(&a, &p, f).unwrap(), 4).unwrap();
        let ob = response_map(&self_dissimilarity(&b, &p, f).unwrap(), 4).unwrap();
        // reach of pattern (4) plus filter taps (2 * 2) stays clear of the borders
        let m = 9;
        for y in m..32 - m - dy {
            for x in m..32 - m - dx {
                prop_assert!((oa.get(x + dx, y + dy) - ob.get(x, y)).abs() < 1e-9);
            }
        }
    }
}
