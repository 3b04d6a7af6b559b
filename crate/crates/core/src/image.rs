//! Single-channel image carrier and the small set of spatial operations the
//! descriptor pipeline builds on: luminance conversion, separable Gaussian
//! blur, blur-only pyramids and replicate-padded shifts.
//!
//! Every operation treats the image as extended by replicating its border
//! pixels, so lookups outside the grid never fail.

use crate::error::{DascError, Result};

/// Row-major grayscale image with values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(DascError::dim(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(DascError::dim(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(DascError::NonFinite {
                stage: "image construction",
                x: idx % width,
                y: idx / width,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image without validating finiteness. Used internally where
    /// values are produced by arithmetic on already-validated inputs.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Value at `(x, y)` with replicate padding for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    /// Bilinear sample at a real position, replicate-padded.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let v00 = self.get_clamped(xi, yi);
        if fx == 0.0 && fy == 0.0 {
            return v00;
        }
        let v10 = self.get_clamped(xi + 1, yi);
        let v01 = self.get_clamped(xi, yi + 1);
        let v11 = self.get_clamped(xi + 1, yi + 1);
        let top = v00 + (v10 - v00) * fx;
        let bottom = v01 + (v11 - v01) * fx;
        top + (bottom - top) * fy
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &Image, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(DascError::dim(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Pointwise map producing a new image.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pointwise combination of two same-sized images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        debug_assert!(self.same_dims(other));
        Image::from_raw(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Copies the rectangle `[x0, x0 + w) x [y0, y0 + h)`; the rectangle must
    /// lie inside the image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(DascError::dim(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(Image::from_raw(w, h, data))
    }

    /// Mirror about the vertical axis.
    pub fn flip_horizontal(&self) -> Image {
        let w = self.width;
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in 0..w {
                data.push(self.data[y * w + (w - 1 - x)]);
            }
        }
        Image::from_raw(w, self.height, data)
    }

    /// Rotates by a quarter turn: `out(x', y') = in(W - 1 - y', x')`.
    /// In the y-down image frame a direction `(dx, dy)` becomes `(dy, -dx)`,
    /// i.e. angles measured with `atan2(dy, dx)` decrease by 90 degrees.
    pub fn rotate90(&self) -> Image {
        let (w, h) = (self.width, self.height);
        // output is h wide, w tall
        let mut data = Vec::with_capacity(w * h);
        for yo in 0..w {
            for xo in 0..h {
                data.push(self.data[xo * w + (w - 1 - yo)]);
            }
        }
        Image::from_raw(h, w, data)
    }
}

/// Three-plane color image, channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl RgbImage {
    pub fn from_planes(r: Image, g: Image, b: Image) -> Result<Self> {
        r.check_same_dims(&g, "color planes R/G")?;
        r.check_same_dims(&b, "color planes R/B")?;
        let (width, height) = (r.width, r.height);
        Ok(Self {
            width,
            height,
            r: r.data,
            g: g.data,
            b: b.data,
        })
    }

    /// Interleaved RGB triples, row-major.
    pub fn from_interleaved(width: usize, height: usize, rgb: &[f64]) -> Result<Self> {
        if rgb.len() != width * height * 3 {
            return Err(DascError::dim(format!(
                "interleaved length {} does not match {width}x{height}x3",
                rgb.len()
            )));
        }
        let plane = |c: usize| -> Result<Image> {
            Image::new(width, height, rgb.iter().skip(c).step_by(3).copied().collect())
        };
        Self::from_planes(plane(0)?, plane(1)?, plane(2)?)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, idx: usize) -> [f64; 3] {
        [self.r[idx], self.g[idx], self.b[idx]]
    }
}

/// Rec. 601 luminance, clamped to `[0, 1]`.
pub fn to_grayscale(color: &RgbImage) -> Image {
    let data = (0..color.width * color.height)
        .map(|i| {
            let [r, g, b] = color.pixel(i);
            (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
        })
        .collect();
    Image::from_raw(color.width, color.height, data)
}

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(DascError::param(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    let (w, h) = (img.width, img.height);

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sx = (x as isize + k as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += t * row[sx];
            }
            horiz[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (k, &t) in taps.iter().enumerate() {
            let sy = (y as isize + k as isize - radius).clamp(0, h as isize - 1) as usize;
            let src = &horiz[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    Ok(Image::from_raw(w, h, out))
}

/// One pyramid level: the blurred image and the blur it carries.
#[derive(Debug, Clone)]
pub struct PyramidLevel {
    pub image: Image,
    pub sigma: f64,
}

/// Blur-only Gaussian pyramid; every level keeps the input resolution.
#[derive(Debug, Clone)]
pub struct Pyramid {
    pub levels: Vec<PyramidLevel>,
}

impl Pyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.sigma).collect()
    }
}

/// Level `k` (zero-based) is blurred with `base_sigma * step^k`.
pub fn build_pyramid(img: &Image, n_levels: usize, base_sigma: f64, step: f64) -> Result<Pyramid> {
    if n_levels == 0 {
        return Err(DascError::param("pyramid needs at least one level"));
    }
    if n_levels > 1 && !(base_sigma > 0.0 && step > 1.0) {
        return Err(DascError::param(format!(
            "multi-level pyramid needs base_sigma > 0 and step > 1 (got {base_sigma}, {step})"
        )));
    }
    let levels = (0..n_levels)
        .map(|k| {
            let sigma = base_sigma * step.powi(k as i32);
            gaussian_blur(img, sigma).map(|image| PyramidLevel { image, sigma })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pyramid { levels })
}

/// `out(p) = img(p + offset)` with replicate padding.
pub fn shift_image(img: &Image, offset: [isize; 2]) -> Image {
    let (w, h) = (img.width, img.height);
    if offset == [0, 0] {
        return img.clone();
    }
    let mut out = Vec::with_capacity(w * h);
    let xs: Vec<usize> = (0..w)
        .map(|x| (x as isize + offset[0]).clamp(0, w as isize - 1) as usize)
        .collect();
    for y in 0..h {
        let sy = (y as isize + offset[1]).clamp(0, h as isize - 1) as usize;
        let row = &img.data[sy * w..(sy + 1) * w];
        out.extend(xs.iter().map(|&sx| row[sx]));
    }
    Image::from_raw(w, h, out)
}

/// Real-valued shift using bilinear interpolation; integer offsets take the
/// exact path of [`shift_image`].
pub fn shift_image_bilinear(img: &Image, offset: [f64; 2]) -> Image {
    if offset[0].fract() == 0.0 && offset[1].fract() == 0.0 {
        return shift_image(img, [offset[0] as isize, offset[1] as isize]);
    }
    let (w, h) = (img.width, img.height);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(img.sample_bilinear(x as f64 + offset[0], y as f64 + offset[1]));
        }
    }
    Image::from_raw(w, h, out)
}

/// Resamples `img` under the inverse map: `out(p) = img(inverse(p))`, bilinear,
/// replicate padding. Handy for building synthetic geometric pairs.
pub fn warp_inverse(
    img: &Image,
    width: usize,
    height: usize,
    inverse: impl Fn(f64, f64) -> (f64, f64),
) -> Result<Image> {
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (sx, sy) = inverse(x as f64, y as f64);
            data.push(img.sample_bilinear(sx, sy));
        }
    }
    Image::new(width, height, data)
}
