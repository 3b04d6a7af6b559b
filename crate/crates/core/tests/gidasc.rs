mod common;

use common::*;
use dasc_core::dasc::{compute_dasc, DascParams};
use dasc_core::geofield::GeometricFieldMap;
use dasc_core::gidasc::{compute_gi_dasc, compute_transformed_dasc, transform_patterns, BlurRule};
use dasc_core::superpixel::{segment_superpixels, SlicParams, SuperpixelMap};
use proptest::prelude::*;

fn slic(img: &dasc_core::image::Image, count: usize) -> SuperpixelMap {
    segment_superpixels(
        img,
        &SlicParams {
            target_count: count,
            ..SlicParams::default()
        },
    )
    .unwrap()
}

#[test]
fn unit_fields_match_whole_image_reference() {
    let img = texture(64, 60, 1.2, 5);
    let base = default_patterns(32, 4);
    let params = DascParams::default();
    let sp = slic(&img, 12);
    let gi = compute_gi_dasc(&img, &sp, &GeometricFieldMap::unit(sp.count()), &base, &params, BlurRule::ScaleSpace).unwrap();
    let whole = compute_transformed_dasc(&img, &base, 1.0, 0.0, &params, BlurRule::ScaleSpace).unwrap();
    let diff = gi.max_abs_diff(&whole);
    assert!(diff <= 1e-4, "{diff}");
}

#[test]
fn uniform_transform_tiles_seamlessly() {
    let img = texture(72, 72, 1.2, 8);
    let base = compact_patterns(24, 6);
    let params = DascParams::default();
    let sp = slic(&img, 9);
    for (g, t) in [(1.3, 0.4), (0.8, -1.1)] {
        let fields = GeometricFieldMap::uniform(sp.count(), g, t);
        let gi = compute_gi_dasc(&img, &sp, &fields, &base, &params, BlurRule::ScaleSpace).unwrap();
        let whole = compute_transformed_dasc(&img, &base, g, t, &params, BlurRule::ScaleSpace).unwrap();
        let diff = gi.max_abs_diff(&whole);
        assert!(diff <= 1e-4, "G = {g}: {diff}");
    }
}

#[test]
fn single_superpixel_is_the_whole_image() {
    let img = texture(40, 40, 1.0, 2);
    let base = compact_patterns(16, 1);
    let params = DascParams::default();
    let sp = SuperpixelMap::single(40, 40).unwrap();
    let fields = GeometricFieldMap::uniform(1, 1.2, 0.3);
    let gi = compute_gi_dasc(&img, &sp, &fields, &base, &params, BlurRule::InverseRoot).unwrap();
    let whole = compute_transformed_dasc(&img, &base, 1.2, 0.3, &params, BlurRule::InverseRoot).unwrap();
    assert!(gi.max_abs_diff(&whole) <= 1e-12);
}

#[test]
fn identity_transform_is_plain_dasc_after_preblur() {
    let img = texture(40, 40, 1.0, 6);
    let base = compact_patterns(16, 2);
    let params = DascParams::default();
    let t = compute_transformed_dasc(&img, &base, 1.0, 0.0, &params, BlurRule::ScaleSpace).unwrap();
    let blurred = dasc_core::image::gaussian_blur(&img, 0.75f64.sqrt()).unwrap();
    let plain = compute_dasc(&blurred, &base, &params).unwrap();
    assert!(t.max_abs_diff(&plain) <= 1e-12);
}

#[test]
fn mismatched_fields_are_rejected() {
    let img = texture(32, 32, 1.0, 1);
    let sp = slic(&img, 4);
    let fields = GeometricFieldMap::unit(sp.count() + 1);
    let r = compute_gi_dasc(&img, &sp, &fields, &compact_patterns(4, 0), &DascParams::default(), BlurRule::ScaleSpace);
    assert!(r.is_err());
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[test]
fn injected_fields_bring_true_matches_closer() {
    let (a, b, forward) = similarity_pair(128, 1.5, 30f64.to_radians(), 3);
    let base = default_patterns(128, 7);
    let params = DascParams::default();
    let (sa, sb) = (slic(&a, 16), slic(&b, 16));
    let ga = compute_gi_dasc(&a, &sa, &GeometricFieldMap::unit(sa.count()), &base, &params, BlurRule::ScaleSpace).unwrap();
    let fb = GeometricFieldMap::uniform(sb.count(), 1.5, 30f64.to_radians());
    let gb = compute_gi_dasc(&b, &sb, &fb, &base, &params, BlurRule::ScaleSpace).unwrap();
    let pa = compute_dasc(&a, &base, &params).unwrap();
    let pb = compute_dasc(&b, &base, &params).unwrap();

    let mut r = rng(1);
    let (mut plain, mut gi) = (Vec::new(), Vec::new());
    use rand::Rng;
    while plain.len() < 100 {
        let (x, y) = (r.gen_range(34.0..94.0f64).round(), r.gen_range(34.0..94.0f64).round());
        let (u, v) = forward(x, y);
        let (u, v) = (u.round() as usize, v.round() as usize);
        plain.push(distance(pa.get(x as usize, y as usize), pb.get(u, v)));
        gi.push(distance(ga.get(x as usize, y as usize), gb.get(u, v)));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[49] + v[50]) / 2.0
    };
    let (mp, mg) = (median(&mut plain), median(&mut gi));
    assert!(mg < mp, "GI {mg} vs plain {mp}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transformed_lengths_scale_linearly(seed in 0u64..10_000, g in 0.3f64..3.0, theta in -7.0f64..7.0) {
        let base = default_patterns(16, seed);
        let t = transform_patterns(&base, g, theta, 5).unwrap();
        prop_assert_eq!(t.patterns.len(), base.len());
        for (p, q) in base.pairs().iter().zip(&t.patterns) {
            for (o, r) in [(p.s, q.s), (p.t, q.t)] {
                let lo = ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt();
                let lr = r[0].hypot(r[1]);
                prop_assert!((lr - g * lo).abs() <= 1e-9 * (1.0 + lr));
            }
        }
    }
}
