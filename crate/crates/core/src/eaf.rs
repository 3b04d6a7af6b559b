//! Constant-time weighted averaging.
//!
//! All patch statistics in the descriptor and the detector are weighted
//! averages `sum_q w(p, q) * src(q)` whose weights are normalized per pixel.
//! Three weightings are provided; the guided filter is the edge-aware default
//! and costs four box filters per source image regardless of the radius.

use crate::error::{DascError, Result};
use crate::image::{gaussian_blur, Image};

/// Guided-filter regularizer used unless configured otherwise (0.03^2).
pub const DEFAULT_EPSILON: f64 = 0.0009;

/// Support half-size and regularizer of the edge-aware filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub radius: usize,
    pub epsilon: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            radius: 2,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl FilterParams {
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        let p = Self { radius, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(DascError::param("filter radius must be >= 1"));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(DascError::param(format!(
                "filter epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Windowed mean over `(2r+1)^2` with replicate padding, via a double
/// precision integral image of the padded input.
pub fn box_filter(img: &Image, radius: usize) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    if radius < 1 {
        return Err(DascError::param("box filter radius must be >= 1"));
    }
    if radius >= w.min(h) {
        return Err(DascError::param(format!(
            "box filter radius {radius} must be smaller than min({w}, {h})"
        )));
    }
    let r = radius as isize;
    let pw = w + 2 * radius;
    let ph = h + 2 * radius;
    let stride = pw + 1;
    let mut integral = vec![0.0f64; stride * (ph + 1)];
    let data = img.data();
    for py in 0..ph {
        let sy = (py as isize - r).clamp(0, h as isize - 1) as usize;
        let row = &data[sy * w..(sy + 1) * w];
        let mut run = 0.0;
        for px in 0..pw {
            let sx = (px as isize - r).clamp(0, w as isize - 1) as usize;
            run += row[sx];
            integral[(py + 1) * stride + px + 1] = integral[py * stride + px + 1] + run;
        }
    }
    let side = 2 * radius + 1;
    let norm = 1.0 / (side * side) as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let top = y * stride;
        let bottom = (y + side) * stride;
        for x in 0..w {
            let s = integral[bottom + x + side] - integral[top + x + side] - integral[bottom + x]
                + integral[top + x];
            out.push(s * norm);
        }
    }
    Ok(Image::from_raw(w, h, out))
}

/// Guided filter with its guidance statistics precomputed, so that filtering
/// many source images under one guidance only pays for the source terms.
#[derive(Debug, Clone)]
pub struct GuidedFilter {
    guidance: Image,
    mean_g: Image,
    /// `var(g) + epsilon` per window
    denom: Image,
    radius: usize,
}

impl GuidedFilter {
    pub fn new(guidance: &Image, params: FilterParams) -> Result<Self> {
        params.validate()?;
        let mean_g = box_filter(guidance, params.radius)?;
        let mean_gg = box_filter(&guidance.map(|v| v * v), params.radius)?;
        let denom = mean_gg.zip_map(&mean_g, |gg, g| gg - g * g + params.epsilon);
        Ok(Self {
            guidance: guidance.clone(),
            mean_g,
            denom,
            radius: params.radius,
        })
    }

    pub fn guidance(&self) -> &Image {
        &self.guidance
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn apply(&self, src: &Image) -> Result<Image> {
        self.guidance.check_same_dims(src, "guided filter source")?;
        let r = self.radius;
        let g = self.guidance.data();
        let mean_s = box_filter(src, r)?;
        let gs = Image::from_raw(
            src.width(),
            src.height(),
            g.iter().zip(src.data()).map(|(a, b)| a * b).collect(),
        );
        let mean_gs = box_filter(&gs, r)?;

        let n = g.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let mg = self.mean_g.data()[i];
            let ms = mean_s.data()[i];
            let cov = mean_gs.data()[i] - mg * ms;
            let d = self.denom.data()[i];
            // only reachable with epsilon = 0 on a flat window
            let ai = if d > 1e-14 { cov / d } else { 0.0 };
            a.push(ai);
            b.push(ms - ai * mg);
        }
        let (w, h) = (src.width(), src.height());
        let mean_a = box_filter(&Image::from_raw(w, h, a), r)?;
        let mean_b = box_filter(&Image::from_raw(w, h, b), r)?;
        let out = mean_a
            .data()
            .iter()
            .zip(mean_b.data())
            .zip(g)
            .map(|((ma, mb), gv)| ma * gv + mb)
            .collect();
        Ok(Image::from_raw(w, h, out))
    }
}

pub fn guided_filter(guidance: &Image, src: &Image, params: FilterParams) -> Result<Image> {
    guidance.check_same_dims(src, "guided filter")?;
    GuidedFilter::new(guidance, params)?.apply(src)
}

/// Which normalized weights define a patch average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Uniform weights over the `(2r+1)^2` window.
    Box,
    /// Separable Gaussian with `sigma = radius / 2`.
    Gaussian,
    /// Guided filter with the given regularizer; the guidance is the image
    /// being described.
    Guided { epsilon: f64 },
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting::Guided {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl Weighting {
    /// Gaussian weighting bandwidth for a given support radius.
    pub fn gaussian_sigma(radius: usize) -> f64 {
        radius as f64 / 2.0
    }

    pub fn averager(&self, guidance: &Image, radius: usize) -> Result<Averager> {
        if radius < 1 {
            return Err(DascError::param("averaging radius must be >= 1"));
        }
        Ok(match *self {
            Weighting::Box => Averager::Box { radius },
            Weighting::Gaussian => Averager::Gaussian {
                sigma: Self::gaussian_sigma(radius),
            },
            Weighting::Guided { epsilon } => {
                Averager::Guided(GuidedFilter::new(guidance, FilterParams { radius, epsilon })?)
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Weighting::Box => "box",
            Weighting::Gaussian => "gaussian",
            Weighting::Guided { .. } => "guided",
        }
    }
}

/// A weighting bound to a guidance image; `average` evaluates the weighted
/// mean of any same-sized source image.
#[derive(Debug, Clone)]
pub enum Averager {
    Box { radius: usize },
    Gaussian { sigma: f64 },
    Guided(GuidedFilter),
}

impl Averager {
    pub fn average(&self, src: &Image) -> Result<Image> {
        match self {
            Averager::Box { radius } => box_filter(src, *radius),
            Averager::Gaussian { sigma } => gaussian_blur(src, *sigma),
            Averager::Guided(gf) => gf.apply(src),
        }
    }
}
