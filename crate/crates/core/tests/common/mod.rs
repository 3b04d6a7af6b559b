#![allow(dead_code)]

use dasc_core::image::Image;
use dasc_core::pattern::{enumerate_candidate_patterns, random_patterns, LogPolarGrid, SamplingPatternSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(w: usize, h: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    Image::from_fn(w, h, |_, _| r.gen::<f64>()).unwrap()
}

/// Smooth random texture: white noise blurred, then stretched to [0, 1].
pub fn texture(w: usize, h: usize, sigma: f64, seed: u64) -> Image {
    let noise = random_image(w, h, seed);
    let blurred = dasc_core::image::gaussian_blur(&noise, sigma).unwrap();
    let (lo, hi) = (blurred.min(), blurred.max());
    blurred.map(|v| (v - lo) / (hi - lo))
}

/// Random patterns drawn from the default DASC grid.
pub fn default_patterns(count: usize, seed: u64) -> SamplingPatternSet {
    let grid = LogPolarGrid::generate(4, 36, 13).unwrap();
    random_patterns(&enumerate_candidate_patterns(&grid), count, seed).unwrap()
}

/// Patterns from a compact grid so small test images keep an interior.
pub fn compact_patterns(count: usize, seed: u64) -> SamplingPatternSet {
    let grid = LogPolarGrid::generate(2, 8, 6).unwrap();
    random_patterns(&enumerate_candidate_patterns(&grid), count, seed).unwrap()
}

/// Elongated Gaussian blobs of random size, orientation and contrast on a
/// flat background.
pub fn blob_scene(w: usize, h: usize, n_blobs: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    let blobs: Vec<[f64; 6]> = (0..n_blobs)
        .map(|_| {
            [
                r.gen_range(12.0..(w as f64 - 12.0)),
                r.gen_range(12.0..(h as f64 - 12.0)),
                r.gen_range(3.0..6.0),
                r.gen_range(1.2..2.5),
                r.gen_range(0.0..std::f64::consts::PI),
                r.gen_range(0.3..0.7) * if r.gen_bool(0.5) { 1.0 } else { -1.0 },
            ]
        })
        .collect();
    Image::from_fn(w, h, |x, y| {
        let mut v = 0.5;
        for &[cx, cy, major, minor, angle, a] in &blobs {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let (c, s) = (angle.cos(), angle.sin());
            let u = (c * dx + s * dy) / major;
            let t = (-s * dx + c * dy) / minor;
            v += a * (-(u * u + t * t) / 2.0).exp();
        }
        v.clamp(0.0, 1.0)
    })
    .unwrap()
}

/// Band-limited random function of the plane: a sum of plane waves with
/// wavelengths between `min_wavelength` and `max_wavelength` pixels, scaled
/// to roughly `[0, 1]`.
pub fn wave_field(
    n_waves: usize,
    min_wavelength: f64,
    max_wavelength: f64,
    seed: u64,
) -> impl Fn(f64, f64) -> f64 {
    let mut r = rng(seed);
    let waves: Vec<[f64; 3]> = (0..n_waves)
        .map(|_| {
            let lambda = r.gen_range(min_wavelength..max_wavelength);
            let angle = r.gen_range(0.0..std::f64::consts::TAU);
            let k = std::f64::consts::TAU / lambda;
            [k * angle.cos(), k * angle.sin(), r.gen_range(0.0..std::f64::consts::TAU)]
        })
        .collect();
    let amp = 0.5 / (n_waves as f64).sqrt();
    move |x, y| {
        let s: f64 = waves.iter().map(|w| (w[0] * x + w[1] * y + w[2]).cos()).sum();
        (0.5 + amp * s * 0.6).clamp(0.0, 1.0)
    }
}

/// `f` sampled on a `w x h` grid after mapping each pixel through `inv`.
pub fn render(w: usize, h: usize, f: &impl Fn(f64, f64) -> f64, inv: impl Fn(f64, f64) -> (f64, f64)) -> Image {
    Image::from_fn(w, h, |x, y| {
        let (u, v) = inv(x as f64, y as f64);
        f(u, v)
    })
    .unwrap()
}

/// Synthetic feature vectors where only `planted` dimensions carry the label:
/// positives draw those dimensions from `[0.6, 1]`, negatives from `[0, 0.7]`;
/// every other dimension is uniform on `[0, 1]` for both classes.
pub fn planted_features(
    n: usize,
    dim: usize,
    planted: &[usize],
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut r = rng(seed);
    let mut feats = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2 == 0;
        let f: Vec<f64> = (0..dim)
            .map(|d| {
                if planted.contains(&d) {
                    if label {
                        r.gen_range(0.6..1.0)
                    } else {
                        r.gen_range(0.0..0.7)
                    }
                } else {
                    r.gen_range(0.0..1.0)
                }
            })
            .collect();
        feats.push(f);
        labels.push(label);
    }
    (feats, labels)
}

/// Pair `(a, b)` where `b` is `a` scaled by `scale` and rotated by `angle`
/// about the image center, both rendered from one continuous wave field.
/// Returns the forward map taking a point of `a` to its match in `b`.
pub fn similarity_pair(
    size: usize,
    scale: f64,
    angle: f64,
    seed: u64,
) -> (Image, Image, impl Fn(f64, f64) -> (f64, f64)) {
    let f = wave_field(24, 6.0, 20.0, seed);
    let c = (size as f64 - 1.0) / 2.0;
    let (s, co) = angle.sin_cos();
    let a = render(size, size, &f, |x, y| (x, y));
    let b = render(size, size, &f, |x, y| {
        let (dx, dy) = ((x - c) / scale, (y - c) / scale);
        (c + co * dx + s * dy, c - s * dx + co * dy)
    });
    let forward = move |x: f64, y: f64| {
        let (dx, dy) = (x - c, y - c);
        (c + scale * (co * dx - s * dy), c + scale * (s * dx + co * dy))
    };
    (a, b, forward)
}
