//! SLIC superpixels with enforced 4-connectivity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::color::rgb_to_lab;
use crate::error::{DascError, Result};
use crate::image::{Image, RgbImage};

const ITERATIONS: usize = 10;

/// A partition of the image into connected regions `0..count`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
    centroids: Vec<[f64; 2]>,
    sizes: Vec<usize>,
}

impl SuperpixelMap {
    /// Builds a map from raw labels, which must cover `0..count` with every
    /// label used.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(DascError::dim(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut sums = vec![[0.0f64; 2]; count];
        let mut sizes = vec![0usize; count];
        for (p, &l) in labels.iter().enumerate() {
            let l = l as usize;
            sizes[l] += 1;
            sums[l][0] += (p % width) as f64;
            sums[l][1] += (p / width) as f64;
        }
        if let Some(m) = sizes.iter().position(|&s| s == 0) {
            return Err(DascError::Format(format!("superpixel label {m} is unused")));
        }
        let centroids = sums
            .iter()
            .zip(&sizes)
            .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64])
            .collect();
        Ok(Self {
            width,
            height,
            labels,
            count,
            centroids,
            sizes,
        })
    }

    /// Every pixel in one superpixel.
    pub fn single(width: usize, height: usize) -> Result<Self> {
        Self::from_labels(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn centroids(&self) -> &[[f64; 2]] {
        &self.centroids
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Pixel indices of each superpixel, in raster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (p, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(p);
        }
        out
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of each superpixel.
    pub fn bounding_boxes(&self) -> Vec<[usize; 4]> {
        let mut boxes = vec![[usize::MAX, usize::MAX, 0, 0]; self.count];
        for (p, &l) in self.labels.iter().enumerate() {
            let (x, y) = (p % self.width, p / self.width);
            let b = &mut boxes[l as usize];
            b[0] = b[0].min(x);
            b[1] = b[1].min(y);
            b[2] = b[2].max(x);
            b[3] = b[3].max(y);
        }
        boxes
    }

    /// Unordered pairs `(m, n)`, `m < n`, sharing a 4-connected border,
    /// sorted.
    pub fn adjacency(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                let a = self.label(x, y);
                if x + 1 < self.width {
                    let b = self.label(x + 1, y);
                    if a != b {
                        pairs.push((a.min(b), a.max(b)));
                    }
                }
                if y + 1 < self.height {
                    let b = self.label(x, y + 1);
                    if a != b {
                        pairs.push((a.min(b), a.max(b)));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Whether every label forms a single 4-connected region.
    pub fn is_connected(&self) -> bool {
        components(&self.labels, self.width, self.height).1 == self.count
    }

    /// Average spacing `sqrt(N / N_m)` between superpixel centers.
    pub fn step(&self) -> f64 {
        ((self.width * self.height) as f64 / self.count as f64).sqrt()
    }
}

/// 4-connected components of equal labels, numbered in raster order of
/// their first pixel.
fn components(labels: &[u32], w: usize, h: usize) -> (Vec<u32>, usize) {
    let mut comp = vec![u32::MAX; labels.len()];
    let mut n = 0u32;
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        if comp[start] != u32::MAX {
            continue;
        }
        comp[start] = n;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if comp[q] == u32::MAX && labels[q] == labels[p] {
                    comp[q] = n;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        n += 1;
    }
    (comp, n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicParams {
    pub target_count: usize,
    pub compactness: f64,
    pub seed: u64,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            target_count: 500,
            compactness: 10.0,
            seed: 0,
        }
    }
}

/// SLIC on a grayscale image, intensities scaled to the `0..100` range of
/// Lab lightness so compactness means the same as for color input.
pub fn segment_superpixels(img: &Image, params: &SlicParams) -> Result<SuperpixelMap> {
    let features: Vec<[f64; 3]> = img.data().iter().map(|&v| [100.0 * v, 0.0, 0.0]).collect();
    slic(&features, img.width(), img.height(), params)
}

/// SLIC on a color image in Lab.
pub fn segment_superpixels_color(img: &RgbImage, params: &SlicParams) -> Result<SuperpixelMap> {
    let features: Vec<[f64; 3]> = (0..img.width() * img.height())
        .map(|p| rgb_to_lab(img.pixel(p)))
        .collect();
    slic(&features, img.width(), img.height(), params)
}

#[derive(Clone, Copy)]
struct Center {
    color: [f64; 3],
    x: f64,
    y: f64,
}

fn color_dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn slic(features: &[[f64; 3]], w: usize, h: usize, params: &SlicParams) -> Result<SuperpixelMap> {
    let n = w * h;
    let k = params.target_count;
    if k == 0 || k > n {
        return Err(DascError::param(format!(
            "target superpixel count {k} must lie in 1..={n}"
        )));
    }
    if !(params.compactness > 0.0) {
        return Err(DascError::param("compactness must be > 0"));
    }
    let step = (n as f64 / k as f64).sqrt();
    let nx = ((w as f64 / step).round() as usize).clamp(1, w);
    let ny = ((h as f64 / step).round() as usize).clamp(1, h);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let jitter = step / 8.0;

    let feature_at = |x: usize, y: usize| features[y * w + x];
    let gradient = |x: usize, y: usize| -> f64 {
        let xl = x.saturating_sub(1);
        let xr = (x + 1).min(w - 1);
        let yu = y.saturating_sub(1);
        let yd = (y + 1).min(h - 1);
        color_dist2(&feature_at(xr, y), &feature_at(xl, y))
            + color_dist2(&feature_at(x, yd), &feature_at(x, yu))
    };

    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let gx = (i as f64 + 0.5) * w as f64 / nx as f64 + rng.gen_range(-jitter..=jitter);
            let gy = (j as f64 + 0.5) * h as f64 / ny as f64 + rng.gen_range(-jitter..=jitter);
            let cx = (gx.floor().max(0.0) as usize).min(w - 1);
            let cy = (gy.floor().max(0.0) as usize).min(h - 1);
            // settle on the lowest-gradient pixel of the 3x3 neighborhood
            let mut best = (cx, cy);
            let mut best_g = gradient(cx, cy);
            for yy in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                for xx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                    let g = gradient(xx, yy);
                    if g < best_g {
                        best_g = g;
                        best = (xx, yy);
                    }
                }
            }
            centers.push(Center {
                color: feature_at(best.0, best.1),
                x: best.0 as f64,
                y: best.1 as f64,
            });
        }
    }

    let spatial = (params.compactness / step).powi(2);
    let mut labels = vec![0u32; n];
    for _ in 0..ITERATIONS {
        // bucket centers on a coarse grid so each pixel only checks nearby ones
        let cell = step.max(1.0);
        let bw = (w as f64 / cell).ceil() as usize + 1;
        let bh = (h as f64 / cell).ceil() as usize + 1;
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); bw * bh];
        for (c, ctr) in centers.iter().enumerate() {
            let bx = ((ctr.x / cell) as usize).min(bw - 1);
            let by = ((ctr.y / cell) as usize).min(bh - 1);
            buckets[by * bw + bx].push(c);
        }
        labels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                let f = features[y * w + x];
                let bx = (x as f64 / cell) as usize;
                let by = (y as f64 / cell) as usize;
                let mut best = (f64::INFINITY, usize::MAX);
                for yy in by.saturating_sub(2)..=(by + 2).min(bh - 1) {
                    for xx in bx.saturating_sub(2)..=(bx + 2).min(bw - 1) {
                        for &c in &buckets[yy * bw + xx] {
                            let ctr = &centers[c];
                            let ds = (ctr.x - x as f64).powi(2) + (ctr.y - y as f64).powi(2);
                            let d = color_dist2(&f, &ctr.color) + ds * spatial;
                            if d < best.0 || (d == best.0 && c < best.1) {
                                best = (d, c);
                            }
                        }
                    }
                }
                *out = best.1 as u32;
            }
        });
        let mut sums = vec![[0.0f64; 5]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            let s = &mut sums[l as usize];
            let f = &features[p];
            s[0] += f[0];
            s[1] += f[1];
            s[2] += f[2];
            s[3] += (p % w) as f64;
            s[4] += (p / w) as f64;
            counts[l as usize] += 1;
        }
        for ((ctr, s), &c) in centers.iter_mut().zip(&sums).zip(&counts) {
            if c > 0 {
                let c = c as f64;
                *ctr = Center {
                    color: [s[0] / c, s[1] / c, s[2] / c],
                    x: s[3] / c,
                    y: s[4] / c,
                };
            }
        }
    }

    let min_size = ((n as f64 / centers.len() as f64) / 4.0).max(1.0) as usize;
    let labels = enforce_connectivity(&labels, w, h, min_size);
    SuperpixelMap::from_labels(w, h, labels)
}

/// Splits labels into 4-connected components, then merges every component
/// smaller than `min_size` into the neighbor met first in raster order.
/// Labels are renumbered densely.
pub fn enforce_connectivity(labels: &[u32], w: usize, h: usize, min_size: usize) -> Vec<u32> {
    let (comp, n) = components(labels, w, h);
    let mut sizes = vec![0usize; n];
    let mut first = vec![usize::MAX; n];
    for (p, &c) in comp.iter().enumerate() {
        sizes[c as usize] += 1;
        if first[c as usize] == usize::MAX {
            first[c as usize] = p;
        }
    }
    // target[c] is where component c ends up; components are visited in
    // raster order of their first pixel, which is their index order
    let mut target: Vec<usize> = (0..n).collect();
    let mut merged_size = sizes.clone();
    for c in 0..n {
        if sizes[c] >= min_size || n == 1 {
            continue;
        }
        let p = first[c];
        let (x, y) = (p % w, p / w);
        // the pixel above or to the left belongs to an earlier component
        let neighbor = if x > 0 {
            Some(comp[p - 1] as usize)
        } else if y > 0 {
            Some(comp[p - w] as usize)
        } else {
            None
        };
        let neighbor = neighbor.or_else(|| find_later_neighbor(&comp, w, h, c));
        if let Some(nb) = neighbor {
            let root = resolve(&target, nb);
            target[c] = root;
            merged_size[root] += merged_size[c];
        }
    }
    let mut dense = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut out = Vec::with_capacity(labels.len());
    for &c in &comp {
        let root = resolve(&target, c as usize);
        if dense[root] == u32::MAX {
            dense[root] = next;
            next += 1;
        }
        out.push(dense[root]);
    }
    out
}

fn resolve(target: &[usize], mut c: usize) -> usize {
    while target[c] != c {
        c = target[c];
    }
    c
}

fn find_later_neighbor(comp: &[u32], w: usize, h: usize, c: usize) -> Option<usize> {
    for (p, &cp) in comp.iter().enumerate() {
        if cp as usize != c {
            continue;
        }
        let (x, y) = (p % w, p / w);
        let around = [
            (x + 1 < w).then(|| p + 1),
            (y + 1 < h).then(|| p + w),
        ];
        for q in around.into_iter().flatten() {
            if comp[q] as usize != c {
                return Some(comp[q] as usize);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_gives_regular_grid() {
        let img = Image::filled(60, 40, 0.5).unwrap();
        let sp = segment_superpixels(
            &img,
            &SlicParams {
                target_count: 24,
                ..SlicParams::default()
            },
        )
        .unwrap();
        assert_eq!(sp.count(), 24);
        assert!(sp.is_connected());
        let mean = 2400.0 / 24.0;
        for &s in sp.sizes() {
            assert!((s as f64 - mean).abs() < 0.5 * mean, "{s}");
        }
    }

    #[test]
    fn connectivity_merges_fragments() {
        // labels 0 and 1 each form two islands; the single pixels of labels 1
        // and 2 fold into the region above or to their left
        #[rustfmt::skip]
        let labels = vec![
            0, 0, 1, 1,
            0, 2, 0, 0,
            1, 0, 0, 0,
        ];
        let out = enforce_connectivity(&labels, 4, 3, 2);
        let sp = SuperpixelMap::from_labels(4, 3, out).unwrap();
        assert!(sp.is_connected());
        assert_eq!(sp.count(), 3);
        assert_eq!(sp.label(1, 1), sp.label(0, 0));
        assert_eq!(sp.label(0, 2), sp.label(0, 0));
    }

    #[test]
    fn rejects_bad_targets() {
        let img = Image::filled(4, 4, 0.5).unwrap();
        let p = |k| SlicParams {
            target_count: k,
            ..SlicParams::default()
        };
        assert!(segment_superpixels(&img, &p(0)).is_err());
        assert!(segment_superpixels(&img, &p(17)).is_err());
        assert_eq!(segment_superpixels(&img, &p(1)).unwrap().count(), 1);
    }

    #[test]
    fn adjacency_of_two_halves() {
        let labels = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let sp = SuperpixelMap::from_labels(4, 2, labels).unwrap();
        assert_eq!(sp.adjacency(), vec![(0, 1)]);
        assert_eq!(sp.centroids()[1], [2.5, 0.5]);
        assert_eq!(sp.bounding_boxes()[0], [0, 0, 1, 1]);
    }
}
