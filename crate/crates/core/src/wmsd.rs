//! Weighted maximal self-dissimilarity keypoints.
//!
//! Each pyramid level is compared against shifted copies of itself along
//! center-anchored log-polar patterns. Per pixel, the `o` smallest weighted
//! SSDs are summed into a response; strict maxima across position and scale
//! become keypoints, and the same `o` directions vote for an orientation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::eaf::{FilterParams, GuidedFilter, DEFAULT_EPSILON};
use crate::error::{DascError, Result};
use crate::image::{build_pyramid, shift_image, Image};
use crate::pattern::{LogPolarGrid, PatternPair, SamplingPatternSet};

/// `(center, ring point)` pairs for every ring point of the grid.
pub fn wmsd_patterns(n_rho: usize, n_theta: usize, radius: usize) -> Result<SamplingPatternSet> {
    let grid = LogPolarGrid::generate(n_rho, n_theta, radius)?;
    let pairs = grid.points()[1..]
        .iter()
        .map(|&t| PatternPair { s: [0, 0], t })
        .collect();
    SamplingPatternSet::new(pairs)
}

/// One `Phi` map per pattern: `U_{i^2} + U_{i,j^2} - 2 U_{i,ij}` with the
/// level itself as guidance. Guided-filter kernels carry negative weights
/// near edges, so these raw sums can dip below zero.
pub fn self_dissimilarity_raw(
    level: &Image,
    patterns: &SamplingPatternSet,
    filter: FilterParams,
) -> Result<Vec<Image>> {
    let gf = GuidedFilter::new(level, filter)?;
    let u_ii = gf.apply(&level.map(|v| v * v))?;
    patterns
        .pairs()
        .par_iter()
        .map(|pair| {
            let shifted = shift_image(level, pair.delta());
            let u_jj = gf.apply(&shifted.map(|v| v * v))?;
            let u_ij = gf.apply(&level.zip_map(&shifted, |a, b| a * b))?;
            let mut phi = u_ii.zip_map(&u_jj, |a, b| a + b);
            for (p, c) in phi.data_mut().iter_mut().zip(u_ij.data()) {
                *p -= 2.0 * c;
            }
            if let Some(idx) = phi.data().iter().position(|v| !v.is_finite()) {
                return Err(DascError::NonFinite {
                    stage: "self-dissimilarity",
                    x: idx % level.width(),
                    y: idx / level.width(),
                });
            }
            Ok(phi)
        })
        .collect()
}

/// Self-dissimilarity maps clamped at zero, so every `Phi` is a proper
/// dissimilarity and every response is nonnegative.
pub fn self_dissimilarity(
    level: &Image,
    patterns: &SamplingPatternSet,
    filter: FilterParams,
) -> Result<Vec<Image>> {
    let mut maps = self_dissimilarity_raw(level, patterns, filter)?;
    for m in &mut maps {
        m.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    }
    Ok(maps)
}

/// Indices of the `o` smallest values, ties by index.
pub fn smallest_indices(values: &[f64], o: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx.truncate(o);
    idx
}

/// Per pixel, the sum of the `o` smallest `Phi` values across directions.
pub fn response_map(phi_maps: &[Image], o: usize) -> Result<Image> {
    if o == 0 {
        return Err(DascError::param("o must be >= 1"));
    }
    if o > phi_maps.len() {
        return Err(DascError::param(format!(
            "o = {o} exceeds the {} dissimilarity maps",
            phi_maps.len()
        )));
    }
    let (w, h) = (phi_maps[0].width(), phi_maps[0].height());
    for m in phi_maps {
        m.check_same_dims(&phi_maps[0], "dissimilarity map")?;
    }
    let data: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map_init(
            || vec![0.0; phi_maps.len()],
            |buf, p| {
                for (b, m) in buf.iter_mut().zip(phi_maps) {
                    *b = m.data()[p];
                }
                buf.sort_by(f64::total_cmp);
                buf[..o].iter().sum()
            },
        )
        .collect();
    Image::new(w, h, data)
}

/// Response `Omega` and the underlying `Phi` maps of one pyramid level.
#[derive(Debug, Clone)]
pub struct ResponseLevel {
    pub sigma: f64,
    /// Patterns used on this level, scaled with its sigma.
    pub patterns: SamplingPatternSet,
    pub omega: Image,
    pub phi: Vec<Image>,
}

#[derive(Debug, Clone)]
pub struct ResponseStack {
    pub levels: Vec<ResponseLevel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    /// Pyramid sigma of the detecting level.
    pub rho: f64,
    /// Radians in `[0, 2 pi)`, image coordinates (y down).
    pub theta: f64,
    pub level: usize,
    /// Set when every orientation vote was zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmsdParams {
    pub n_rho: usize,
    pub n_theta: usize,
    pub radius: usize,
    pub patch_size: usize,
    pub epsilon: f64,
    pub n_levels: usize,
    pub base_sigma: f64,
    pub sigma_step: f64,
    pub o: usize,
    /// Keypoints need `Omega >` this factor times the level's median positive
    /// response.
    pub threshold_factor: f64,
    /// Also accept strict minima of `Omega`.
    pub include_minima: bool,
    /// Pixels closer than this to the border are never detected.
    pub border: usize,
}

impl Default for WmsdParams {
    fn default() -> Self {
        Self {
            n_rho: 3,
            n_theta: 12,
            radius: 8,
            patch_size: 5,
            epsilon: DEFAULT_EPSILON,
            n_levels: 4,
            base_sigma: 1.0,
            sigma_step: std::f64::consts::SQRT_2,
            o: 10,
            threshold_factor: 0.6,
            include_minima: false,
            border: 3,
        }
    }
}

impl WmsdParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size % 2 == 0 || self.patch_size < 3 {
            return Err(DascError::param("WMSD patch size must be odd and >= 3"));
        }
        if self.o == 0 || self.o > self.n_rho * self.n_theta {
            return Err(DascError::param(format!(
                "o = {} must lie in 1..={}",
                self.o,
                self.n_rho * self.n_theta
            )));
        }
        if !(self.threshold_factor >= 0.0) {
            return Err(DascError::param("threshold factor must be >= 0"));
        }
        Ok(())
    }

    /// Magnification of level `k` relative to the first level.
    pub fn level_factor(&self, k: usize) -> f64 {
        self.sigma_step.powi(k as i32)
    }

    pub fn filter(&self) -> FilterParams {
        FilterParams {
            radius: self.patch_size / 2,
            epsilon: self.epsilon,
        }
    }
}

/// Blurring alone only lowers dissimilarity, so each level's pattern radius
/// and averaging radius grow with `sigma_k / sigma_1`. A level then sees its
/// blurred image the way the first level would see a subsampled one.
pub fn build_response_stack(img: &Image, params: &WmsdParams) -> Result<ResponseStack> {
    params.validate()?;
    let pyramid = build_pyramid(img, params.n_levels, params.base_sigma, params.sigma_step)?;
    let levels = pyramid
        .levels
        .iter()
        .enumerate()
        .map(|(k, lvl)| {
            let factor = params.level_factor(k);
            let radius = (params.radius as f64 * factor).round() as usize;
            let patterns = wmsd_patterns(params.n_rho, params.n_theta, radius)?;
            let filter = FilterParams {
                radius: ((params.patch_size / 2) as f64 * factor).round() as usize,
                epsilon: params.epsilon,
            };
            let phi = self_dissimilarity(&lvl.image, &patterns, filter)?;
            let omega = response_map(&phi, params.o)?;
            Ok(ResponseLevel {
                sigma: lvl.sigma,
                patterns,
                omega,
                phi,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ResponseStack { levels })
}

fn median_positive(img: &Image) -> f64 {
    let mut pos: Vec<f64> = img.data().iter().copied().filter(|&v| v > 0.0).collect();
    if pos.is_empty() {
        return 0.0;
    }
    let mid = pos.len() / 2;
    let (_, m, _) = pos.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Strict extrema over the 26-neighborhood in `(x, y, scale)` on interior
/// levels, above the per-level threshold. Orientation is left at zero.
pub fn detect_keypoints(stack: &ResponseStack, params: &WmsdParams) -> Vec<Keypoint> {
    let n = stack.levels.len();
    if n < 3 {
        return Vec::new();
    }
    let w = stack.levels[0].omega.width();
    let h = stack.levels[0].omega.height();
    let b = params.border.max(1);
    if w <= 2 * b || h <= 2 * b {
        return Vec::new();
    }
    let mut out = Vec::new();
    for k in 1..n - 1 {
        let omega = &stack.levels[k].omega;
        let threshold = params.threshold_factor * median_positive(omega);
        let found: Vec<Keypoint> = (b..h - b)
            .into_par_iter()
            .flat_map_iter(|y| {
                (b..w - b).filter_map(move |x| {
                    let v = omega.get(x, y);
                    if !(v > threshold) {
                        return None;
                    }
                    let mut is_max = true;
                    let mut is_min = params.include_minima;
                    for kk in k - 1..=k + 1 {
                        let m = &stack.levels[kk].omega;
                        for yy in y - 1..=y + 1 {
                            for xx in x - 1..=x + 1 {
                                if kk == k && yy == y && xx == x {
                                    continue;
                                }
                                let u = m.get(xx, yy);
                                is_max &= v > u;
                                is_min &= v < u;
                            }
                        }
                        if !is_max && !is_min {
                            return None;
                        }
                    }
                    Some(Keypoint {
                        x,
                        y,
                        rho: stack.levels[k].sigma,
                        theta: 0.0,
                        level: k,
                        degenerate: false,
                    })
                })
            })
            .collect();
        out.extend(found);
    }
    out
}

/// Direction-bin histogram of the `o` smallest `Phi` at a pixel, each member
/// voting with its own `Phi` at the bin nearest its pattern angle.
pub fn orientation_histogram(
    phi_maps: &[Image],
    patterns: &SamplingPatternSet,
    n_theta: usize,
    o: usize,
    x: usize,
    y: usize,
) -> Vec<f64> {
    let values: Vec<f64> = phi_maps.iter().map(|m| m.get(x, y)).collect();
    let step = 2.0 * PI / n_theta as f64;
    let mut hist = vec![0.0; n_theta];
    for l in smallest_indices(&values, o) {
        let d = patterns.pairs()[l].delta();
        let angle = (d[1] as f64).atan2(d[0] as f64).rem_euclid(2.0 * PI);
        let bin = (angle / step).round() as usize % n_theta;
        hist[bin] += values[l];
    }
    hist
}

/// Angle of the heaviest histogram bin, ties to the smaller angle, and
/// whether the histogram was all zero.
pub fn histogram_peak(hist: &[f64]) -> (f64, bool) {
    let step = 2.0 * PI / hist.len() as f64;
    let mut best = 0;
    for (i, &v) in hist.iter().enumerate() {
        if v > hist[best] {
            best = i;
        }
    }
    let degenerate = hist.iter().all(|&v| v == 0.0);
    if degenerate {
        (0.0, true)
    } else {
        (best as f64 * step, false)
    }
}

pub fn estimate_orientation(
    keypoint: &Keypoint,
    phi_maps: &[Image],
    patterns: &SamplingPatternSet,
    n_theta: usize,
    o: usize,
) -> (f64, bool) {
    let hist = orientation_histogram(phi_maps, patterns, n_theta, o, keypoint.x, keypoint.y);
    histogram_peak(&hist)
}

/// Pyramid, responses, detection and orientation in one call.
pub fn detect_wmsd(img: &Image, params: &WmsdParams) -> Result<Vec<Keypoint>> {
    let stack = build_response_stack(img, params)?;
    let mut kps = detect_keypoints(&stack, params);
    for kp in &mut kps {
        let level = &stack.levels[kp.level];
        let (theta, degenerate) = estimate_orientation(
            kp,
            &level.phi,
            &level.patterns,
            params.n_theta,
            params.o,
        );
        kp.theta = theta;
        kp.degenerate = degenerate;
    }
    Ok(kps)
}
