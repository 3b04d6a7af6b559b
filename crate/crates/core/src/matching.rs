//! Winner-takes-all matching over descriptor fields and the evaluation
//! metrics used on its output.

use rayon::prelude::*;

use crate::dasc::DescriptorField;
use crate::error::{DascError, Result};
use crate::image::Image;

/// Per-pixel disparity with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(DascError::dim(format!(
                "disparity map {width}x{height} with {} values and {} flags",
                values.len(),
                valid.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// All-valid map holding one value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Per-pixel `(u, v)` displacement with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<[f64; 2]>,
    pub valid: Vec<bool>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, values: Vec<[f64; 2]>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(DascError::dim(format!(
                "flow field {width}x{height} with {} vectors and {} flags",
                values.len(),
                valid.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    pub fn filled(width: usize, height: usize, uv: [f64; 2]) -> Self {
        Self {
            width,
            height,
            values: vec![uv; width * height],
            valid: vec![true; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.values[y * self.width + x]
    }
}

fn check_fields(a: &DescriptorField, b: &DescriptorField) -> Result<()> {
    if !a.same_shape(b) {
        return Err(DascError::dim(format!(
            "descriptor fields {}x{}x{} and {}x{}x{} differ",
            a.width(),
            a.height(),
            a.dim(),
            b.width(),
            b.height(),
            b.dim()
        )));
    }
    Ok(())
}

/// For each left pixel, the disparity `d` in `0..=max_disp` minimizing the
/// squared distance to `right(x - d, y)`; ties go to the smaller `d`, and
/// candidates left of the image are skipped.
pub fn match_stereo_wta(
    left: &DescriptorField,
    right: &DescriptorField,
    max_disp: usize,
) -> Result<DisparityMap> {
    check_fields(left, right)?;
    let (w, h) = (left.width(), left.height());
    let values: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let mut best = (f64::INFINITY, 0usize);
            for d in 0..=max_disp.min(x) {
                let cost = left.distance_sq(x, y, right, x - d, y);
                if cost < best.0 {
                    best = (cost, d);
                }
            }
            best.1 as f64
        })
        .collect();
    DisparityMap::new(w, h, values, vec![true; w * h])
}

/// For each pixel of `a`, the displacement in the `(2r + 1)^2` window of `b`
/// with the smallest squared distance; ties go to the lexicographically
/// smaller `(v, u)`. Pixels whose window leaves the image only search the
/// part inside it.
pub fn match_flow_wta(a: &DescriptorField, b: &DescriptorField, radius: usize) -> Result<FlowField> {
    check_fields(a, b)?;
    let (w, h) = (a.width(), a.height());
    let r = radius as isize;
    let values: Vec<[f64; 2]> = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            let mut best = (f64::INFINITY, [0isize, 0isize]);
            // v outer, u inner: the first strict minimum is the lexicographic one
            for v in -r..=r {
                let ty = y + v;
                if ty < 0 || ty >= h as isize {
                    continue;
                }
                for u in -r..=r {
                    let tx = x + u;
                    if tx < 0 || tx >= w as isize {
                        continue;
                    }
                    let cost = a.distance_sq(x as usize, y as usize, b, tx as usize, ty as usize);
                    if cost < best.0 {
                        best = (cost, [u, v]);
                    }
                }
            }
            [best.1[0] as f64, best.1[1] as f64]
        })
        .collect();
    FlowField::new(w, h, values, vec![true; w * h])
}

/// Fraction of masked pixels whose disparity error exceeds `threshold`. An
/// invalid estimate at a masked pixel counts as bad.
pub fn bad_pixel_rate(
    est: &DisparityMap,
    gt: &DisparityMap,
    threshold: f64,
    mask: &[bool],
) -> Result<f64> {
    if est.width != gt.width || est.height != gt.height || mask.len() != gt.values.len() {
        return Err(DascError::dim("disparity maps and mask differ in size"));
    }
    let mut total = 0usize;
    let mut bad = 0usize;
    for p in 0..mask.len() {
        if !mask[p] {
            continue;
        }
        total += 1;
        if !est.valid[p] || (est.values[p] - gt.values[p]).abs() > threshold {
            bad += 1;
        }
    }
    if total == 0 {
        return Err(DascError::UndefinedMetric("bad-pixel rate over an empty mask".into()));
    }
    Ok(bad as f64 / total as f64)
}

/// `(1 / T_a) sum 1(e_i != a_i and a_i > 0)` with `T_a` the number of
/// labeled ground-truth pixels; label 0 means unlabeled.
pub fn label_transfer_error(est: &[u32], gt: &[u32]) -> Result<f64> {
    if est.len() != gt.len() {
        return Err(DascError::dim(format!(
            "{} estimated labels, {} ground-truth labels",
            est.len(),
            gt.len()
        )));
    }
    let labeled = gt.iter().filter(|&&a| a > 0).count();
    if labeled == 0 {
        return Err(DascError::UndefinedMetric("no labeled ground-truth pixels".into()));
    }
    let wrong = est
        .iter()
        .zip(gt)
        .filter(|(&e, &a)| a > 0 && e != a)
        .count();
    Ok(wrong as f64 / labeled as f64)
}

/// Mean `|flow - gt|` over masked pixels.
pub fn endpoint_error(flow: &FlowField, gt: &FlowField, mask: &[bool]) -> Result<f64> {
    if flow.width != gt.width || flow.height != gt.height || mask.len() != gt.values.len() {
        return Err(DascError::dim("flow fields and mask differ in size"));
    }
    let mut total = 0usize;
    let mut sum = 0.0;
    for p in 0..mask.len() {
        if mask[p] {
            let [u, v] = flow.values[p];
            let [gu, gv] = gt.values[p];
            sum += (u - gu).hypot(v - gv);
            total += 1;
        }
    }
    if total == 0 {
        return Err(DascError::UndefinedMetric("endpoint error over an empty mask".into()));
    }
    Ok(sum / total as f64)
}

/// Labels carried from the target image back along the flow:
/// `out(x, y) = labels_b(x + u, y + v)`, 0 where the flow leaves the image
/// or is invalid.
pub fn transfer_labels(flow: &FlowField, labels_b: &[u32]) -> Result<Vec<u32>> {
    let (w, h) = (flow.width, flow.height);
    if labels_b.len() != w * h {
        return Err(DascError::dim("label map and flow differ in size"));
    }
    Ok((0..w * h)
        .map(|p| {
            if !flow.valid[p] {
                return 0;
            }
            let [u, v] = flow.values[p];
            let tx = (p % w) as f64 + u;
            let ty = (p / w) as f64 + v;
            if tx < 0.0 || ty < 0.0 {
                return 0;
            }
            let (tx, ty) = (tx.round() as usize, ty.round() as usize);
            if tx >= w || ty >= h {
                0
            } else {
                labels_b[ty * w + tx]
            }
        })
        .collect())
}

/// Raw intensities of the `(2r + 1)^2` patch around each pixel (replicate
/// padding) as a descriptor field, for intensity-SSD baselines.
pub fn intensity_patch_field(img: &Image, radius: usize) -> Result<DescriptorField> {
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let side = 2 * radius + 1;
    let dim = side * side;
    let mut values = Vec::with_capacity(w * h * dim);
    for y in 0..h as isize {
        for x in 0..w as isize {
            for dy in -r..=r {
                for dx in -r..=r {
                    values.push(img.get_clamped(x + dx, y + dy));
                }
            }
        }
    }
    DescriptorField::new(w, h, dim, values)
}
