mod common;

use dasc_core::geofield::{
    affinity_weight, appearance_features_color, appearance_features_gray, circular_mean,
    fit_sparse_fields, propagate, superpixel_affinity, Affinity, GeometricFieldMap,
    LaplacianSystem, PropagationStatus,
};
use dasc_core::image::{Image, RgbImage};
use dasc_core::superpixel::{segment_superpixels, SlicParams, SuperpixelMap};
use dasc_core::wmsd::Keypoint;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn kp(x: usize, y: usize, rho: f64, theta_deg: f64) -> Keypoint {
    Keypoint {
        x,
        y,
        rho,
        theta: theta_deg.to_radians(),
        level: 1,
        degenerate: false,
    }
}

/// Random connected graph: a spanning chain plus extra random edges.
fn random_system(n: usize, seed: u64) -> (GeometricFieldMap, Affinity) {
    let mut r = common::rng(seed);
    let mut edges = Vec::new();
    for m in 0..n - 1 {
        edges.push((m, m + 1, r.gen_range(0.05..1.0)));
    }
    for _ in 0..n {
        let a = r.gen_range(0..n);
        let b = r.gen_range(0..n);
        if a + 1 < b {
            edges.push((a, b, r.gen_range(0.05..1.0)));
        }
    }
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    edges.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    let mut fields = GeometricFieldMap::unit(n);
    for m in 0..n {
        if r.gen_bool(0.3) || m == 0 {
            fields.constrained[m] = true;
            fields.g_rho[m] = r.gen_range(0.5..3.0);
            fields.g_theta[m] = r.gen_range(0.0..1.5);
        }
    }
    (fields, Affinity { count: n, edges })
}

fn dense_solve(fields: &GeometricFieldMap, aff: &Affinity, mu: f64, rhs: &[f64]) -> Vec<f64> {
    let n = fields.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for m in 0..n {
        if fields.constrained[m] {
            a[(m, m)] += 1.0;
        }
    }
    for &(m, k, w) in &aff.edges {
        a[(m, m)] += mu * w;
        a[(k, k)] += mu * w;
        a[(m, k)] -= mu * w;
        a[(k, m)] -= mu * w;
    }
    let b = DVector::from_iterator(
        n,
        (0..n).map(|m| if fields.constrained[m] { rhs[m] } else { 0.0 }),
    );
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

#[test]
fn propagation_matches_dense_elimination() {
    for seed in 0..10 {
        let (fields, aff) = random_system(20, seed);
        let out = propagate(&fields, &aff, 1.0).unwrap();
        assert_eq!(out.status, PropagationStatus::Ok);
        assert!(out.residual <= 1e-6, "residual {}", out.residual);
        let logs: Vec<f64> = fields.g_rho.iter().map(|r| r.ln()).collect();
        let cos: Vec<f64> = fields.g_theta.iter().map(|t| t.cos()).collect();
        let sin: Vec<f64> = fields.g_theta.iter().map(|t| t.sin()).collect();
        let lr = dense_solve(&fields, &aff, 1.0, &logs);
        let c = dense_solve(&fields, &aff, 1.0, &cos);
        let s = dense_solve(&fields, &aff, 1.0, &sin);
        for m in 0..20 {
            assert!((out.fields.g_rho[m].ln() - lr[m]).abs() <= 1e-6, "seed {seed} m {m}");
            let angle = s[m].atan2(c[m]).rem_euclid(std::f64::consts::TAU);
            let d = (out.fields.g_theta[m] - angle).abs();
            assert!(d.min(std::f64::consts::TAU - d) <= 1e-6);
        }
    }
}

#[test]
fn single_anchor_gives_constant_field() {
    let (_, aff) = random_system(20, 42);
    let mut fields = GeometricFieldMap::unit(20);
    fields.constrained[7] = true;
    fields.g_rho[7] = 1.7;
    fields.g_theta[7] = 0.4;
    let out = propagate(&fields, &aff, 1.0).unwrap();
    for m in 0..20 {
        assert!((out.fields.g_rho[m] - 1.7).abs() < 1e-9);
        assert!((out.fields.g_theta[m] - 0.4).abs() < 1e-9);
    }
}

#[test]
fn zero_mu_keeps_constraints() {
    let (fields, aff) = random_system(12, 3);
    let all = GeometricFieldMap {
        constrained: vec![true; 12],
        g_rho: (0..12).map(|i| 1.0 + i as f64 * 0.1).collect(),
        g_theta: (0..12).map(|i| i as f64 * 0.2).collect(),
    };
    let out = propagate(&all, &aff, 0.0).unwrap();
    for m in 0..12 {
        assert!((out.fields.g_rho[m] - all.g_rho[m]).abs() < 1e-12);
        assert!((out.fields.g_theta[m] - all.g_theta[m]).abs() < 1e-12);
    }
    // with mu = 0 every unconstrained superpixel is its own component
    let out = propagate(&fields, &aff, 0.0).unwrap();
    assert!(out.fields.g_rho.iter().all(|&r| r > 0.0));
}

#[test]
fn no_constraints_returns_unit_fields() {
    let (_, aff) = random_system(8, 1);
    let out = propagate(&GeometricFieldMap::unit(8), &aff, 1.0).unwrap();
    assert_eq!(out.status, PropagationStatus::NoConstraints);
    assert!(out.fields.g_rho.iter().all(|&r| r == 1.0));
    assert!(out.fields.g_theta.iter().all(|&t| t == 0.0));
}

#[test]
fn disconnected_component_gets_constrained_mean() {
    // 0-1-2 connected and anchored; 3-4 connected among themselves only
    let aff = Affinity {
        count: 5,
        edges: vec![(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.5)],
    };
    let mut fields = GeometricFieldMap::unit(5);
    fields.constrained[0] = true;
    fields.g_rho[0] = 2.0;
    fields.constrained[2] = true;
    fields.g_rho[2] = 8.0;
    let out = propagate(&fields, &aff, 1.0).unwrap();
    // geometric mean of the constrained scales
    assert!((out.fields.g_rho[3] - 4.0).abs() < 1e-9);
    assert!((out.fields.g_rho[4] - 4.0).abs() < 1e-9);
}

#[test]
fn system_is_diagonally_dominant() {
    let (fields, aff) = random_system(20, 9);
    let sys = LaplacianSystem::build(&fields.constrained, &aff, 1.0);
    for i in 0..sys.len() {
        let off: f64 = sys.off[i].iter().map(|(_, v)| v.abs()).sum();
        assert!(sys.diag[i] + 1e-12 >= off);
    }
}

#[test]
fn fitting_examples() {
    let sp = SuperpixelMap::from_labels(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    let f = fit_sparse_fields(&[kp(0, 0, 2.0, 30.0)], &sp, 1.0).unwrap();
    assert_eq!(f.g_rho[0], 2.0);
    assert!((f.g_theta[0] - 30f64.to_radians()).abs() < 1e-12);
    assert_eq!(f.constrained, vec![true, false]);

    let f = fit_sparse_fields(&[kp(2, 0, 1.0, 350.0), kp(3, 1, 3.0, 10.0)], &sp, 1.0).unwrap();
    assert_eq!(f.g_theta[1], 0.0);
    assert_eq!(f.g_rho[1], 2.0);

    let f = fit_sparse_fields(&[], &sp, 1.0).unwrap();
    assert_eq!(f.constrained, vec![false, false]);
    assert_eq!(circular_mean(&[0.5, 0.5]), 0.5);
}

#[test]
fn affinity_examples() {
    // two superpixels, centroid distance 2 px, step sqrt(8 / 2) = 2 px
    let sp = SuperpixelMap::from_labels(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    let lambda_p = 1.0;
    let feats = vec![vec![0.0, 0.0], vec![0.1f64.sqrt(), 0.0]];
    let aff = superpixel_affinity(&sp, &feats, 0.1, lambda_p).unwrap();
    assert_eq!(aff.edges.len(), 1);
    assert!((aff.weight(0, 1) - (-2f64).exp()).abs() < 1e-12);
    assert_eq!(aff.weight(0, 1), aff.weight(1, 0));
    assert_eq!(affinity_weight(0.0, 0.0, 0.1, 30.0), 1.0);
}

#[test]
fn appearance_feature_dimensions() {
    let img = common::texture(40, 30, 2.0, 5);
    let sp = segment_superpixels(&img, &SlicParams { target_count: 12, ..Default::default() }).unwrap();
    let g = appearance_features_gray(&sp, &img).unwrap();
    assert!(g.iter().all(|f| f.len() == 2));
    let rgb = RgbImage::from_planes(img.clone(), img.map(|v| 1.0 - v), img.map(|v| v * 0.5)).unwrap();
    let c = appearance_features_color(&sp, &rgb).unwrap();
    assert!(c.iter().all(|f| f.len() == 18 && f.iter().all(|v| (-0.01..=1.01).contains(v))));
    let aff = superpixel_affinity(&sp, &c, 0.1, 30.0).unwrap();
    for &(m, n, w) in &aff.edges {
        assert!(m < n && w > 0.0 && w <= 1.0);
    }
}

#[test]
fn slic_count_on_large_image() {
    let img = common::texture(1200, 800, 6.0, 2);
    let sp = segment_superpixels(&img, &SlicParams::default()).unwrap();
    assert!((400..=600).contains(&sp.count()), "{}", sp.count());
    assert!(sp.is_connected());
    assert_eq!(sp.sizes().iter().sum::<usize>(), 1200 * 800);
}

#[test]
fn slic_is_seeded() {
    let img = common::texture(80, 60, 3.0, 8);
    let p = SlicParams { target_count: 30, compactness: 10.0, seed: 4 };
    let a = segment_superpixels(&img, &p).unwrap();
    let b = segment_superpixels(&img, &p).unwrap();
    assert_eq!(a, b);
    assert!(a.is_connected());
}

#[test]
fn uniform_image_partitions_everything() {
    let img = Image::filled(100, 70, 0.2).unwrap();
    let sp = segment_superpixels(&img, &SlicParams { target_count: 35, ..Default::default() }).unwrap();
    assert!(sp.is_connected());
    assert!((28..=42).contains(&sp.count()));
    let mean = 7000.0 / sp.count() as f64;
    assert!(sp.sizes().iter().all(|&s| (s as f64) > 0.4 * mean && (s as f64) < 1.8 * mean));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_obeys_maximum_principle(seed in 0u64..10_000) {
        let (fields, aff) = random_system(20, seed);
        let out = propagate(&fields, &aff, 1.0).unwrap();
        let cons: Vec<f64> = (0..20).filter(|&m| fields.constrained[m]).map(|m| fields.g_rho[m]).collect();
        let lo = cons.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cons.iter().copied().fold(0.0, f64::max);
        for &r in &out.fields.g_rho {
            prop_assert!(r >= lo * (1.0 - 1e-9) && r <= hi * (1.0 + 1e-9));
        }
    }

    #[test]
    fn relabeling_permutes_solution(seed in 0u64..10_000, shift in 1usize..19) {
        let (fields, aff) = random_system(20, seed);
        let perm: Vec<usize> = (0..20).map(|m| (m + shift) % 20).collect();
        let mut pf = GeometricFieldMap::unit(20);
        for m in 0..20 {
            pf.g_rho[perm[m]] = fields.g_rho[m];
            pf.g_theta[perm[m]] = fields.g_theta[m];
            pf.constrained[perm[m]] = fields.constrained[m];
        }
        let mut edges: Vec<_> = aff.edges.iter().map(|&(a, b, w)| {
            let (x, y) = (perm[a], perm[b]);
            (x.min(y), x.max(y), w)
        }).collect();
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let paff = Affinity { count: 20, edges };
        let a = propagate(&fields, &aff, 1.0).unwrap();
        let b = propagate(&pf, &paff, 1.0).unwrap();
        for m in 0..20 {
            prop_assert!((a.fields.g_rho[m] - b.fields.g_rho[perm[m]]).abs() < 1e-7);
        }
    }
}
