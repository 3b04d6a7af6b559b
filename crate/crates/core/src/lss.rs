//! Local self-similarity baseline: an SSD correlation surface over the
//! support window, max-pooled into log-polar bins.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::dasc::DescriptorField;
use crate::eaf::box_filter;
use crate::error::{DascError, Result};
use crate::image::{shift_image, Image};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LssParams {
    pub n_rho: usize,
    pub n_theta: usize,
    pub patch_size: usize,
    pub window_size: usize,
    pub sigma_s: f64,
}

impl Default for LssParams {
    fn default() -> Self {
        Self {
            n_rho: 3,
            n_theta: 12,
            patch_size: 5,
            window_size: 31,
            sigma_s: 1.0,
        }
    }
}

/// Outer radius of each radial bin, log-spaced up to the window radius.
pub fn lss_bin_radii(n_rho: usize, window_radius: usize) -> Vec<f64> {
    let outer = window_radius as f64;
    (1..=n_rho)
        .map(|r| outer.powf(r as f64 / n_rho as f64))
        .collect()
}

/// Bin index `r * n_theta + a` for a displacement, or `None` for the center
/// or displacements outside the outermost ring. Radial bins are
/// `(rho_{r-1}, rho_r]` with `rho_0 = 0`; angular bins are
/// `(theta_{a-1}, theta_a]` with a zero angle counted as a full turn.
pub fn lss_bin(dx: isize, dy: isize, radii: &[f64], n_theta: usize) -> Option<usize> {
    if dx == 0 && dy == 0 {
        return None;
    }
    let dist = ((dx * dx + dy * dy) as f64).sqrt();
    let r = radii.iter().position(|&rho| dist <= rho + 1e-12)?;
    let mut angle = (dy as f64).atan2(dx as f64);
    if angle <= 0.0 {
        angle += 2.0 * PI;
    }
    let step = 2.0 * PI / n_theta as f64;
    let a = ((angle / step - 1e-12).ceil() as usize).clamp(1, n_theta) - 1;
    Some(r * n_theta + a)
}

/// Dense LSS field of dimension `n_rho * n_theta`. The target patch of a
/// displacement `d` is read from the replicate-padded shifted image, so
/// `SSD(i, d) = sum_q (f(i+q) - f((i+q) + d))^2` over padded coordinates.
pub fn compute_lss(img: &Image, params: &LssParams) -> Result<DescriptorField> {
    let LssParams {
        n_rho,
        n_theta,
        patch_size,
        window_size,
        sigma_s,
    } = *params;
    if n_rho == 0 || n_theta == 0 {
        return Err(DascError::param("LSS needs n_rho >= 1 and n_theta >= 1"));
    }
    if patch_size % 2 == 0 || window_size % 2 == 0 || window_size < patch_size {
        return Err(DascError::param(format!(
            "LSS patch ({patch_size}) and window ({window_size}) must be odd with window >= patch"
        )));
    }
    if !(sigma_s > 0.0) {
        return Err(DascError::param("LSS sigma_s must be > 0"));
    }
    let radius = window_size / 2;
    let radii = lss_bin_radii(n_rho, radius);
    let pr = patch_size / 2;
    let patch_area = (patch_size * patch_size) as f64;

    let r = radius as isize;
    let displacements: Vec<(isize, isize, usize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter_map(|(dx, dy)| lss_bin(dx, dy, &radii, n_theta).map(|b| (dx, dy, b)))
        .collect();

    let surfaces: Vec<Image> = displacements
        .par_iter()
        .map(|&(dx, dy, _)| {
            let shifted = shift_image(img, [dx, dy]);
            let sq = img.zip_map(&shifted, |a, b| (a - b) * (a - b));
            let ssd = if pr == 0 {
                sq
            } else {
                box_filter(&sq, pr)?.map(|m| m * patch_area)
            };
            Ok(ssd.map(|s| (-s / sigma_s).exp()))
        })
        .collect::<Result<_>>()?;

    let (w, h) = (img.width(), img.height());
    let dim = n_rho * n_theta;
    let mut values = vec![0.0; w * h * dim];
    values
        .par_chunks_mut(dim)
        .enumerate()
        .for_each(|(p, cell)| {
            for (k, &(_, _, bin)) in displacements.iter().enumerate() {
                let c = surfaces[k].data()[p];
                if c > cell[bin] {
                    cell[bin] = c;
                }
            }
        });
    DescriptorField::new(w, h, dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_rings_times_sectors() {
        let img = Image::filled(20, 20, 0.3).unwrap();
        let p = LssParams {
            n_rho: 3,
            n_theta: 8,
            patch_size: 3,
            window_size: 11,
            sigma_s: 0.5,
        };
        let f = compute_lss(&img, &p).unwrap();
        assert_eq!(f.dim(), 24);
        // constant image: every SSD is zero
        assert!(f.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn bins_partition_the_window() {
        let radii = lss_bin_radii(3, 7);
        let mut counts = vec![0; 3 * 12];
        for dy in -7isize..=7 {
            for dx in -7isize..=7 {
                if let Some(b) = lss_bin(dx, dy, &radii, 12) {
                    counts[b] += 1;
                }
            }
        }
        assert!(lss_bin(0, 0, &radii, 12).is_none());
        assert!(counts.iter().sum::<usize>() > 100);
        assert_eq!(lss_bin(1, 0, &radii, 4), Some(3));
        assert_eq!(lss_bin(0, 1, &radii, 4), Some(0));
    }

    #[test]
    fn rejects_bad_geometry() {
        let img = Image::filled(10, 10, 0.3).unwrap();
        let p = LssParams {
            window_size: 3,
            patch_size: 5,
            ..LssParams::default()
        };
        assert!(compute_lss(&img, &p).is_err());
    }
}
