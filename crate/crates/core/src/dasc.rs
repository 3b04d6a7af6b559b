//! Dense adaptive self-correlation descriptor, efficient path.
//!
//! For a pattern `(s, t)` the pair is re-expressed as the reference pixel `i`
//! and the target `j = i + (t - s)`. With source-side weights the weighted
//! correlation needs only five weighted averages: `G_i`, `G_i^2` (shared by
//! all patterns) and `G_j`, `G_j^2`, `G_ij` (one set per distinct offset),
//! each obtained with the constant-time averager under the image's own
//! guidance. The correlation map computed at `i` is read back at `i + s`
//! to fill descriptor slot `l`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::eaf::{Averager, Weighting};
use crate::error::{DascError, Result};
use crate::image::{shift_image_bilinear, Image};
use crate::pattern::SamplingPatternSet;

/// Variances below this make the correlation undefined; it is taken as 0.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DascParams {
    /// Bandwidth of the robust exponential.
    pub sigma_c: f64,
    /// Truncation floor of the robust exponential.
    pub tau_c: f64,
    /// Patch side `N` (odd); the averaging radius is `N / 2`.
    pub patch_size: usize,
    /// Support window side `M` (odd).
    pub support_size: usize,
    /// Descriptor dimension `L` used when selecting patterns.
    pub dim: usize,
    pub weighting: Weighting,
}

impl Default for DascParams {
    fn default() -> Self {
        Self {
            sigma_c: 0.5,
            tau_c: 0.03,
            patch_size: 5,
            support_size: 31,
            dim: 128,
            weighting: Weighting::default(),
        }
    }
}

impl DascParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c > 0.0 && self.tau_c < 1.0) {
            return Err(DascError::param(format!("tau_c must be in (0, 1), got {}", self.tau_c)));
        }
        if !(self.sigma_c > 0.0) || !self.sigma_c.is_finite() {
            return Err(DascError::param(format!("sigma_c must be > 0, got {}", self.sigma_c)));
        }
        if self.patch_size < 3 || self.patch_size % 2 == 0 {
            return Err(DascError::param(format!(
                "patch size must be odd and >= 3, got {}",
                self.patch_size
            )));
        }
        if self.support_size % 2 == 0 || self.support_size <= self.patch_size {
            return Err(DascError::param(format!(
                "support size must be odd and larger than the patch, got {}",
                self.support_size
            )));
        }
        if self.dim == 0 {
            return Err(DascError::param("descriptor dimension must be >= 1"));
        }
        if let Weighting::Guided { epsilon } = self.weighting {
            if !(epsilon >= 0.0) || !epsilon.is_finite() {
                return Err(DascError::param(format!("epsilon must be >= 0, got {epsilon}")));
            }
        }
        Ok(())
    }

    pub fn patch_radius(&self) -> usize {
        self.patch_size / 2
    }

    /// Largest endpoint offset whose patch still fits in the support window.
    pub fn pattern_limit(&self) -> usize {
        self.support_size / 2 - self.patch_size / 2
    }
}

/// Truncated exponential of the correlation magnitude.
#[inline]
pub fn robust_similarity(psi: f64, sigma_c: f64, tau_c: f64) -> f64 {
    let mag = psi.abs().min(1.0);
    (-(1.0 - mag) / sigma_c).exp().max(tau_c)
}

/// Normalized correlation from weighted moments; 0 when either side is flat.
/// The result is clamped to `[-1, 1]`, which only matters for weightings that
/// can go negative (the guided filter).
#[inline]
pub fn correlation_from_moments(g_i: f64, g_ii: f64, g_j: f64, g_jj: f64, g_ij: f64) -> f64 {
    let var_i = g_ii - g_i * g_i;
    let var_j = g_jj - g_j * g_j;
    if var_i < DEGENERATE_VARIANCE || var_j < DEGENERATE_VARIANCE {
        return 0.0;
    }
    ((g_ij - g_i * g_j) / (var_i.sqrt() * var_j.sqrt())).clamp(-1.0, 1.0)
}

/// `H x W x L` descriptor volume, pixel-major then slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorField {
    width: usize,
    height: usize,
    dim: usize,
    values: Vec<f64>,
}

impl DescriptorField {
    pub fn new(width: usize, height: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || dim == 0 {
            return Err(DascError::dim("descriptor field dimensions must be non-zero"));
        }
        if values.len() != width * height * dim {
            return Err(DascError::dim(format!(
                "descriptor values {} != {width}x{height}x{dim}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            dim,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &[f64] {
        let o = (y * self.width + x) * self.dim;
        &self.values[o..o + self.dim]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let o = (y * self.width + x) * self.dim;
        &mut self.values[o..o + self.dim]
    }

    /// Squared Euclidean distance between a descriptor here and one in `other`.
    #[inline]
    pub fn distance_sq(&self, x: usize, y: usize, other: &DescriptorField, ox: usize, oy: usize) -> f64 {
        self.get(x, y)
            .iter()
            .zip(other.get(ox, oy))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn same_shape(&self, other: &DescriptorField) -> bool {
        self.width == other.width && self.height == other.height && self.dim == other.dim
    }

    /// Scales every pixel's vector to unit Euclidean length.
    pub fn normalize(&mut self) {
        self.values.par_chunks_mut(self.dim).for_each(|v| {
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|a| *a /= norm);
            }
        });
    }

    pub fn max_abs_diff(&self, other: &DescriptorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A sampling pattern with real-valued endpoints (geometrically transformed
/// patterns leave the integer grid).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPattern {
    pub s: [f64; 2],
    pub t: [f64; 2],
}

impl RealPattern {
    pub fn delta(&self) -> [f64; 2] {
        [self.t[0] - self.s[0], self.t[1] - self.s[1]]
    }
}

/// Weighted first and second moments of the guidance image itself.
struct SourceMoments {
    averager: Averager,
    mean: Image,
    mean_sq: Image,
}

impl SourceMoments {
    fn new(img: &Image, weighting: Weighting, radius: usize) -> Result<Self> {
        let averager = weighting.averager(img, radius)?;
        let mean = averager.average(img)?;
        let mean_sq = averager.average(&img.map(|v| v * v))?;
        Ok(Self {
            averager,
            mean,
            mean_sq,
        })
    }

    /// Robust similarity map for one source-to-target offset.
    fn similarity_map(&self, img: &Image, delta: [f64; 2], params: &DascParams) -> Result<Image> {
        let target = shift_image_bilinear(img, delta);
        let g_j = self.averager.average(&target)?;
        let g_jj = self.averager.average(&target.map(|v| v * v))?;
        let g_ij = self.averager.average(&img.zip_map(&target, |a, b| a * b))?;
        let (w, h) = (img.width(), img.height());
        let mut out = Vec::with_capacity(w * h);
        for p in 0..w * h {
            let psi = correlation_from_moments(
                self.mean.data()[p],
                self.mean_sq.data()[p],
                g_j.data()[p],
                g_jj.data()[p],
                g_ij.data()[p],
            );
            if !psi.is_finite() {
                return Err(DascError::NonFinite {
                    stage: "adaptive self-correlation",
                    x: p % w,
                    y: p / w,
                });
            }
            out.push(robust_similarity(psi, params.sigma_c, params.tau_c));
        }
        Ok(Image::from_raw(w, h, out))
    }
}

fn delta_key(d: [f64; 2]) -> (i64, i64) {
    ((d[0] * 1e9).round() as i64, (d[1] * 1e9).round() as i64)
}

/// Pre-normalization descriptor for real-valued patterns with an explicit
/// averaging radius. Shared by the plain and geometry-invariant paths.
pub fn compute_dasc_real_raw(
    img: &Image,
    patterns: &[RealPattern],
    averaging_radius: usize,
    params: &DascParams,
) -> Result<DescriptorField> {
    if patterns.is_empty() {
        return Err(DascError::param("no sampling patterns"));
    }
    let moments = SourceMoments::new(img, params.weighting, averaging_radius)?;

    let mut slot_of: HashMap<(i64, i64), usize> = HashMap::new();
    let mut deltas = Vec::new();
    let pattern_slots: Vec<usize> = patterns
        .iter()
        .map(|p| {
            let d = p.delta();
            *slot_of.entry(delta_key(d)).or_insert_with(|| {
                deltas.push(d);
                deltas.len() - 1
            })
        })
        .collect();
    log::debug!(
        "dasc: {} patterns, {} distinct offsets, radius {averaging_radius}",
        patterns.len(),
        deltas.len()
    );

    let maps: Vec<Image> = deltas
        .par_iter()
        .map(|&d| moments.similarity_map(img, d, params))
        .collect::<Result<_>>()?;

    let (w, h) = (img.width(), img.height());
    let dim = patterns.len();
    let mut values = vec![0.0; w * h * dim];
    values
        .par_chunks_mut(w * dim)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let cell = &mut row[x * dim..(x + 1) * dim];
                for (l, p) in patterns.iter().enumerate() {
                    let map = &maps[pattern_slots[l]];
                    cell[l] = map.sample_bilinear(x as f64 + p.s[0], y as f64 + p.s[1]);
                }
            }
        });
    DescriptorField::new(w, h, dim, values)
}

fn integer_patterns(patterns: &SamplingPatternSet, params: &DascParams) -> Result<Vec<RealPattern>> {
    params.validate()?;
    if patterns.is_empty() {
        return Err(DascError::param("no sampling patterns"));
    }
    let limit = params.pattern_limit();
    if patterns.max_extent() > limit {
        return Err(DascError::param(format!(
            "pattern extent {} exceeds support limit {limit} (M = {}, N = {})",
            patterns.max_extent(),
            params.support_size,
            params.patch_size
        )));
    }
    Ok(patterns
        .pairs()
        .iter()
        .map(|p| RealPattern {
            s: [p.s[0] as f64, p.s[1] as f64],
            t: [p.t[0] as f64, p.t[1] as f64],
        })
        .collect())
}

/// Descriptor values before unit normalization; each lies in `[tau_c, 1]`.
pub fn compute_dasc_raw(
    img: &Image,
    patterns: &SamplingPatternSet,
    params: &DascParams,
) -> Result<DescriptorField> {
    let real = integer_patterns(patterns, params)?;
    compute_dasc_real_raw(img, &real, params.patch_radius(), params)
}

/// Dense DASC descriptor, unit-normalized per pixel.
pub fn compute_dasc(
    img: &Image,
    patterns: &SamplingPatternSet,
    params: &DascParams,
) -> Result<DescriptorField> {
    let mut field = compute_dasc_raw(img, patterns, params)?;
    field.normalize();
    Ok(field)
}
