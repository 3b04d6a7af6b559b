//! Direct evaluation of the adaptive self-correlation from explicit per-pixel
//! weights, `O(I * N * L)`.
//!
//! Weights are materialized pixel by pixel from their definitions (uniform
//! window, separable Gaussian taps, or the guided-filter kernel expanded over
//! every window that covers the pixel) and the correlations are summed in
//! centered form. Nothing here goes through box filters, so it serves as the
//! reference for the constant-time path, and it is the only route for the
//! symmetric (source and target weighted) variant.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dasc::{robust_similarity, DascParams, DescriptorField, DEGENERATE_VARIANCE};
use crate::eaf::Weighting;
use crate::error::{DascError, Result};
use crate::image::Image;
use crate::pattern::{Offset, SamplingPatternSet};

/// Non-zero weights `(pixel index, weight)` of one averaging kernel, sorted
/// by pixel index. The weights sum to one.
pub type KernelWeights = Vec<(usize, f64)>;

#[inline]
fn clamp_xy(img: &Image, x: isize, y: isize) -> (usize, usize) {
    (
        x.clamp(0, img.width() as isize - 1) as usize,
        y.clamp(0, img.height() as isize - 1) as usize,
    )
}

fn window_stats(g: &Image, kx: usize, ky: usize, r: isize) -> (f64, f64) {
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut sum = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            sum += g.get_clamped(kx as isize + dx, ky as isize + dy);
        }
    }
    let mean = sum / n;
    let mut var = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let d = g.get_clamped(kx as isize + dx, ky as isize + dy) - mean;
            var += d * d;
        }
    }
    (mean, var / n)
}

/// Explicit averaging weights centered at `(x, y)` under `guidance`, with
/// replicate padding folded onto the border pixels.
pub fn kernel_weights(
    guidance: &Image,
    weighting: Weighting,
    radius: usize,
    x: usize,
    y: usize,
) -> KernelWeights {
    let w = guidance.width();
    let r = radius as isize;
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let (xi, yi) = (x as isize, y as isize);
    match weighting {
        Weighting::Box => {
            let n = ((2 * r + 1) * (2 * r + 1)) as f64;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = clamp_xy(guidance, xi + dx, yi + dy);
                    *acc.entry(qy * w + qx).or_insert(0.0) += 1.0 / n;
                }
            }
        }
        Weighting::Gaussian => {
            let sigma = Weighting::gaussian_sigma(radius);
            let kr = (3.0 * sigma).ceil() as isize;
            let taps: Vec<f64> = (-kr..=kr)
                .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
                .collect();
            let total: f64 = taps.iter().sum();
            for (j, ty) in taps.iter().enumerate() {
                for (i, tx) in taps.iter().enumerate() {
                    let (qx, qy) =
                        clamp_xy(guidance, xi + i as isize - kr, yi + j as isize - kr);
                    *acc.entry(qy * w + qx).or_insert(0.0) += tx * ty / (total * total);
                }
            }
        }
        Weighting::Guided { epsilon } => {
            let n = ((2 * r + 1) * (2 * r + 1)) as f64;
            let gi = guidance.get(x, y);
            for ay in -r..=r {
                for ax in -r..=r {
                    // every window k that covers the output pixel
                    let (kx, ky) = clamp_xy(guidance, xi + ax, yi + ay);
                    let (mu, var) = window_stats(guidance, kx, ky, r);
                    let denom = var + epsilon;
                    for cy in -r..=r {
                        for cx in -r..=r {
                            let (qx, qy) = clamp_xy(guidance, kx as isize + cx, ky as isize + cy);
                            let gq = guidance.get(qx, qy);
                            let coupling = if denom > 1e-14 {
                                (gi - mu) * (gq - mu) / denom
                            } else {
                                0.0
                            };
                            *acc.entry(qy * w + qx).or_insert(0.0) += (1.0 + coupling) / (n * n);
                        }
                    }
                }
            }
        }
    }
    acc.into_iter().collect()
}

/// Weighted sum of squared differences between the patch at the kernel
/// center and the patch displaced by `delta`.
pub fn weighted_ssd(img: &Image, weights: &KernelWeights, delta: Offset) -> f64 {
    let w = img.width();
    weights
        .iter()
        .map(|&(q, wq)| {
            let t = img.get_clamped((q % w) as isize + delta[0], (q / w) as isize + delta[1]);
            let d = img.data()[q] - t;
            wq * d * d
        })
        .sum()
}

/// Source-weighted correlation between the patch at the kernel center and the
/// patch displaced by `delta`, summed in centered form.
pub fn asymmetric_correlation(img: &Image, weights: &KernelWeights, delta: Offset) -> f64 {
    let w = img.width();
    let target = |q: usize| -> f64 {
        img.get_clamped((q % w) as isize + delta[0], (q / w) as isize + delta[1])
    };
    let mut g_i = 0.0;
    let mut g_j = 0.0;
    for &(q, wq) in weights {
        g_i += wq * img.data()[q];
        g_j += wq * target(q);
    }
    let (mut num, mut var_i, mut var_j) = (0.0, 0.0, 0.0);
    for &(q, wq) in weights {
        let a = img.data()[q] - g_i;
        let b = target(q) - g_j;
        num += wq * a * b;
        var_i += wq * a * a;
        var_j += wq * b * b;
    }
    if var_i < DEGENERATE_VARIANCE || var_j < DEGENERATE_VARIANCE {
        return 0.0;
    }
    (num / (var_i.sqrt() * var_j.sqrt())).clamp(-1.0, 1.0)
}

/// Correlation with both patches weighted by their own kernels, pairing
/// pixels by equal displacement from the two centers. Displacements that
/// leave the image on either side are skipped.
pub fn symmetric_correlation(
    img: &Image,
    source: (usize, usize, &KernelWeights),
    target: (usize, usize, &KernelWeights),
) -> f64 {
    let w = img.width() as isize;
    let h = img.height() as isize;
    let (sx, sy, ws) = source;
    let (tx, ty, wt) = target;
    let mean = |k: &KernelWeights| k.iter().map(|&(q, v)| v * img.data()[q]).sum::<f64>();
    let (g_s, g_t) = (mean(ws), mean(wt));
    let lookup: BTreeMap<usize, f64> = wt.iter().copied().collect();

    let (mut num, mut ss, mut tt) = (0.0, 0.0, 0.0);
    for &(q, wq) in ws {
        let dx = (q as isize % w) - sx as isize;
        let dy = (q as isize / w) - sy as isize;
        let (px, py) = (tx as isize + dx, ty as isize + dy);
        if px < 0 || py < 0 || px >= w || py >= h {
            continue;
        }
        let p = (py * w + px) as usize;
        let Some(&wp) = lookup.get(&p) else { continue };
        let a = wq * (img.data()[q] - g_s);
        let b = wp * (img.data()[p] - g_t);
        num += a * b;
        ss += a * a;
        tt += b * b;
    }
    let floor = DEGENERATE_VARIANCE * DEGENERATE_VARIANCE;
    if ss < floor || tt < floor {
        return 0.0;
    }
    (num / (ss.sqrt() * tt.sqrt())).clamp(-1.0, 1.0)
}

/// Brute-force descriptor before unit normalization.
pub fn compute_dasc_oracle_raw(
    img: &Image,
    patterns: &SamplingPatternSet,
    params: &DascParams,
    symmetric: bool,
) -> Result<DescriptorField> {
    params.validate()?;
    if patterns.is_empty() {
        return Err(DascError::param("no sampling patterns"));
    }
    if patterns.max_extent() > params.pattern_limit() {
        return Err(DascError::param(format!(
            "pattern extent {} exceeds support limit {}",
            patterns.max_extent(),
            params.pattern_limit()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let radius = params.patch_radius();
    let weights: Vec<KernelWeights> = (0..w * h)
        .into_par_iter()
        .map(|p| kernel_weights(img, params.weighting, radius, p % w, p / w))
        .collect();

    let dim = patterns.len();
    let mut values = vec![0.0; w * h * dim];
    values
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(p, cell)| {
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for (l, pair) in patterns.pairs().iter().enumerate() {
                let (sx, sy) = clamp_xy(img, x + pair.s[0], y + pair.s[1]);
                let psi = if symmetric {
                    let (tx, ty) = clamp_xy(img, x + pair.t[0], y + pair.t[1]);
                    symmetric_correlation(
                        img,
                        (sx, sy, &weights[sy * w + sx]),
                        (tx, ty, &weights[ty * w + tx]),
                    )
                } else {
                    asymmetric_correlation(img, &weights[sy * w + sx], pair.delta())
                };
                cell[l] = robust_similarity(psi, params.sigma_c, params.tau_c);
            }
        });
    DescriptorField::new(w, h, dim, values)
}

/// Brute-force descriptor, unit-normalized like [`crate::dasc::compute_dasc`].
pub fn compute_dasc_oracle(
    img: &Image,
    patterns: &SamplingPatternSet,
    params: &DascParams,
    symmetric: bool,
) -> Result<DescriptorField> {
    let mut field = compute_dasc_oracle_raw(img, patterns, params, symmetric)?;
    field.normalize();
    Ok(field)
}
