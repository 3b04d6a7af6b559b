//! Geometry-invariant DASC: each superpixel gets its own scaled and rotated
//! patterns, a matching pre-blur and a larger averaging patch, evaluated on
//! an extended subimage around the superpixel.

use rayon::prelude::*;

use crate::dasc::{compute_dasc_real_raw, DascParams, DescriptorField, RealPattern};
use crate::error::{DascError, Result};
use crate::geofield::GeometricFieldMap;
use crate::image::{gaussian_blur, gaussian_kernel, Image};
use crate::pattern::SamplingPatternSet;
use crate::superpixel::SuperpixelMap;

/// Patterns mapped by `S R` for one superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPatternSet {
    pub patterns: Vec<RealPattern>,
    pub scale: f64,
    pub rotation: f64,
    /// Enlarged patch side `round(N * scale)`.
    pub patch_size: usize,
}

impl TransformedPatternSet {
    /// Averaging radius for the enlarged patch, at least 1.
    pub fn averaging_radius(&self) -> usize {
        (self.patch_size / 2).max(1)
    }

    /// Largest endpoint length.
    pub fn reach(&self) -> f64 {
        self.patterns
            .iter()
            .flat_map(|p| [p.s, p.t])
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }
}

fn transform_point(p: [isize; 2], scale: f64, c: f64, s: f64) -> [f64; 2] {
    let (x, y) = (p[0] as f64, p[1] as f64);
    [scale * (c * x - s * y), scale * (s * x + c * y)]
}

/// Scales then rotates every endpoint (rotation in image coordinates, so a
/// quarter turn sends `(1, 0)` to `(0, 1)`).
pub fn transform_patterns(
    base: &SamplingPatternSet,
    g_rho: f64,
    g_theta: f64,
    patch_size: usize,
) -> Result<TransformedPatternSet> {
    if !(g_rho > 0.0) || !g_rho.is_finite() {
        return Err(DascError::param(format!("scale must be > 0, got {g_rho}")));
    }
    if !g_theta.is_finite() {
        return Err(DascError::param("rotation must be finite"));
    }
    let (s, c) = g_theta.sin_cos();
    let patterns = base
        .pairs()
        .iter()
        .map(|p| RealPattern {
            s: transform_point(p.s, g_rho, c, s),
            t: transform_point(p.t, g_rho, c, s),
        })
        .collect();
    Ok(TransformedPatternSet {
        patterns,
        scale: g_rho,
        rotation: g_theta,
        patch_size: ((patch_size as f64 * g_rho).round() as usize).max(1),
    })
}

/// How the pre-blur sigma follows the scale field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlurRule {
    /// `sqrt(max(G^2 - 0.25, 0))`: the scale-space increment that takes an
    /// image with the nominal 0.5 px blur to `0.5 G`.
    #[default]
    ScaleSpace,
    /// `(G^2 - 0.25)^(-1/2)`, only defined for `G > 0.5`.
    InverseRoot,
}

impl BlurRule {
    pub fn sigma(&self, g_rho: f64) -> Result<f64> {
        let inc = g_rho * g_rho - 0.25;
        match self {
            BlurRule::ScaleSpace => Ok(inc.max(0.0).sqrt()),
            BlurRule::InverseRoot => {
                if inc <= 0.0 {
                    Err(DascError::param(format!(
                        "inverse-root blur undefined for scale {g_rho} <= 0.5"
                    )))
                } else {
                    Ok(1.0 / inc.sqrt())
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlurRule::ScaleSpace => "scale-space",
            BlurRule::InverseRoot => "inverse-root",
        }
    }
}

/// Pixels of context a superpixel's bounding box needs on each side so that
/// every value read for its pixels is computed from real image data: pattern
/// reach, twice the averaging radius (filter coefficients are themselves
/// window averages), blur taps, and one pixel for bilinear reads.
pub fn subimage_padding(set: &TransformedPatternSet, blur_sigma: f64) -> usize {
    let blur_radius = if blur_sigma > 0.0 {
        gaussian_kernel(blur_sigma).len() / 2
    } else {
        0
    };
    set.reach().ceil() as usize + 2 * set.averaging_radius() + blur_radius + 1
}

/// GI-DASC over a superpixel partition with one transform per superpixel.
pub fn compute_gi_dasc(
    img: &Image,
    spmap: &SuperpixelMap,
    fields: &GeometricFieldMap,
    base: &SamplingPatternSet,
    params: &DascParams,
    blur: BlurRule,
) -> Result<DescriptorField> {
    params.validate()?;
    fields.validate()?;
    if base.is_empty() {
        return Err(DascError::param("no sampling patterns"));
    }
    if spmap.width() != img.width() || spmap.height() != img.height() {
        return Err(DascError::dim(format!(
            "superpixel map {}x{} does not match image {}x{}",
            spmap.width(),
            spmap.height(),
            img.width(),
            img.height()
        )));
    }
    if fields.len() != spmap.count() {
        return Err(DascError::dim(format!(
            "{} field entries for {} superpixels",
            fields.len(),
            spmap.count()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let dim = base.len();
    let boxes = spmap.bounding_boxes();
    let members = spmap.members();

    let rows: Vec<Vec<(usize, Vec<f64>)>> = (0..spmap.count())
        .into_par_iter()
        .map(|m| {
            let set = transform_patterns(base, fields.g_rho[m], fields.g_theta[m], params.patch_size)?;
            let sigma = blur.sigma(fields.g_rho[m])?;
            let mut pad = subimage_padding(&set, sigma);
            let [bx0, by0, bx1, by1] = boxes[m];
            loop {
                let x0 = bx0.saturating_sub(pad);
                let y0 = by0.saturating_sub(pad);
                let x1 = (bx1 + pad).min(w - 1);
                let y1 = (by1 + pad).min(h - 1);
                let (sw, sh) = (x1 - x0 + 1, y1 - y0 + 1);
                // the averaging window must fit inside the subimage
                if set.averaging_radius() >= sw.min(sh) {
                    if sw == w && sh == h {
                        return Err(DascError::param(format!(
                            "averaging radius {} does not fit a {w}x{h} image",
                            set.averaging_radius()
                        )));
                    }
                    pad *= 2;
                    continue;
                }
                let sub = img.crop(x0, y0, sw, sh)?;
                let sub = gaussian_blur(&sub, sigma)?;
                let raw = compute_dasc_real_raw(&sub, &set.patterns, set.averaging_radius(), params)?;
                return Ok(members[m]
                    .iter()
                    .map(|&p| {
                        let (x, y) = (p % w, p / w);
                        (p, raw.get(x - x0, y - y0).to_vec())
                    })
                    .collect());
            }
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; w * h * dim];
    for part in rows {
        for (p, v) in part {
            values[p * dim..(p + 1) * dim].copy_from_slice(&v);
        }
    }
    let mut field = DescriptorField::new(w, h, dim, values)?;
    field.normalize();
    Ok(field)
}

/// Plain DASC on the whole image with one transform applied everywhere,
/// after the same pre-blur. The reference for uniform fields.
pub fn compute_transformed_dasc(
    img: &Image,
    base: &SamplingPatternSet,
    g_rho: f64,
    g_theta: f64,
    params: &DascParams,
    blur: BlurRule,
) -> Result<DescriptorField> {
    params.validate()?;
    let set = transform_patterns(base, g_rho, g_theta, params.patch_size)?;
    let blurred = gaussian_blur(img, blur.sigma(g_rho)?)?;
    let mut field = compute_dasc_real_raw(&blurred, &set.patterns, set.averaging_radius(), params)?;
    field.normalize();
    Ok(field)
}
