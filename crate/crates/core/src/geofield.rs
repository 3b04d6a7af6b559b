//! Per-superpixel scale and rotation fields: fitting from sparse keypoints,
//! appearance affinities between adjacent superpixels, and propagation by a
//! weighted graph Laplacian.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::color::{lab_unit, ycbcr_unit};
use crate::error::{DascError, Result};
use crate::image::{Image, RgbImage};
use crate::superpixel::SuperpixelMap;
use crate::wmsd::Keypoint;

/// Scale, rotation and constraint flag per superpixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricFieldMap {
    pub g_rho: Vec<f64>,
    pub g_theta: Vec<f64>,
    pub constrained: Vec<bool>,
}

impl GeometricFieldMap {
    /// `count` unconstrained superpixels at unit scale, zero rotation.
    pub fn unit(count: usize) -> Self {
        Self {
            g_rho: vec![1.0; count],
            g_theta: vec![0.0; count],
            constrained: vec![false; count],
        }
    }

    /// The same transform on every superpixel, all constrained.
    pub fn uniform(count: usize, g_rho: f64, g_theta: f64) -> Self {
        Self {
            g_rho: vec![g_rho; count],
            g_theta: vec![g_theta; count],
            constrained: vec![true; count],
        }
    }

    pub fn len(&self) -> usize {
        self.g_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_rho.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_theta.len() != self.len() || self.constrained.len() != self.len() {
            return Err(DascError::dim("field components have differing lengths"));
        }
        if let Some(m) = self.g_rho.iter().position(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(DascError::param(format!(
                "superpixel {m} has non-positive scale {}",
                self.g_rho[m]
            )));
        }
        if self.g_theta.iter().any(|t| !t.is_finite()) {
            return Err(DascError::param("rotation field is not finite"));
        }
        Ok(())
    }
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Circular mean of angles in radians, wrapped to `[0, 2 pi)`.
pub fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    let mean = wrap_angle(s.atan2(c));
    // round away trig noise so 350 and 10 degrees average to exactly 0
    let snapped = (mean * 1e12).round() / 1e12;
    wrap_angle(snapped)
}

/// Mean scale factor (`rho / base_sigma`) and circular mean orientation of
/// the keypoints inside each superpixel.
pub fn fit_sparse_fields(
    keypoints: &[Keypoint],
    spmap: &SuperpixelMap,
    base_sigma: f64,
) -> Result<GeometricFieldMap> {
    if !(base_sigma > 0.0) {
        return Err(DascError::param("base sigma must be > 0"));
    }
    let n = spmap.count();
    let mut scales: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut angles: Vec<Vec<f64>> = vec![Vec::new(); n];
    for kp in keypoints {
        if kp.x >= spmap.width() || kp.y >= spmap.height() {
            return Err(DascError::dim(format!(
                "keypoint ({}, {}) outside the {}x{} superpixel map",
                kp.x,
                kp.y,
                spmap.width(),
                spmap.height()
            )));
        }
        let m = spmap.label(kp.x, kp.y);
        scales[m].push(kp.rho / base_sigma);
        angles[m].push(kp.theta);
    }
    let mut out = GeometricFieldMap::unit(n);
    for m in 0..n {
        if !scales[m].is_empty() {
            out.g_rho[m] = scales[m].iter().sum::<f64>() / scales[m].len() as f64;
            out.g_theta[m] = circular_mean(&angles[m]);
            out.constrained[m] = true;
        }
    }
    Ok(out)
}

/// Per-superpixel mean and standard deviation of one channel.
fn mean_std(spmap: &SuperpixelMap, values: impl Fn(usize) -> f64 + Sync) -> Vec<[f64; 2]> {
    spmap
        .members()
        .par_iter()
        .map(|px| {
            let n = px.len() as f64;
            let mean = px.iter().map(|&p| values(p)).sum::<f64>() / n;
            let var = px.iter().map(|&p| (values(p) - mean).powi(2)).sum::<f64>() / n;
            [mean, var.sqrt()]
        })
        .collect()
}

/// Two appearance features per superpixel: intensity mean and deviation.
pub fn appearance_features_gray(spmap: &SuperpixelMap, img: &Image) -> Result<Vec<Vec<f64>>> {
    if img.width() != spmap.width() || img.height() != spmap.height() {
        return Err(DascError::dim("image and superpixel map differ in size"));
    }
    Ok(mean_std(spmap, |p| img.data()[p])
        .into_iter()
        .map(|ms| ms.to_vec())
        .collect())
}

/// Eighteen appearance features per superpixel: mean and deviation of each
/// channel of RGB, Lab and YCbCr, every channel scaled to roughly `[0, 1]`.
pub fn appearance_features_color(spmap: &SuperpixelMap, img: &RgbImage) -> Result<Vec<Vec<f64>>> {
    if img.width() != spmap.width() || img.height() != spmap.height() {
        return Err(DascError::dim("image and superpixel map differ in size"));
    }
    let n = img.width() * img.height();
    let channels: Vec<[f64; 9]> = (0..n)
        .into_par_iter()
        .map(|p| {
            let rgb = img.pixel(p);
            let lab = lab_unit(rgb);
            let ycc = ycbcr_unit(rgb);
            [rgb[0], rgb[1], rgb[2], lab[0], lab[1], lab[2], ycc[0], ycc[1], ycc[2]]
        })
        .collect();
    let mut feats = vec![Vec::with_capacity(18); spmap.count()];
    for c in 0..9 {
        for (f, ms) in feats.iter_mut().zip(mean_std(spmap, |p| channels[p][c])) {
            f.extend_from_slice(&ms);
        }
    }
    Ok(feats)
}

/// Symmetric weights `omega_mn` on the edges of the superpixel adjacency
/// graph, stored once per edge with `m < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    pub count: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Affinity {
    pub fn weight(&self, m: usize, n: usize) -> f64 {
        let key = (m.min(n), m.max(n));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|i| self.edges[i].2)
            .unwrap_or(0.0)
    }

    /// Row sums `U_mm = sum_n omega_mn`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.count];
        for &(m, n, w) in &self.edges {
            d[m] += w;
            d[n] += w;
        }
        d
    }
}

/// `exp(-|dc|^2 / lambda_c - |dp|^2 / lambda_p)` for adjacent superpixels.
/// Centroids are measured in units of the superpixel step
/// `sqrt(N / N_m)`, so `lambda_p` does not depend on image size.
pub fn superpixel_affinity(
    spmap: &SuperpixelMap,
    features: &[Vec<f64>],
    lambda_c: f64,
    lambda_p: f64,
) -> Result<Affinity> {
    if features.len() != spmap.count() {
        return Err(DascError::dim(format!(
            "{} feature vectors for {} superpixels",
            features.len(),
            spmap.count()
        )));
    }
    if !(lambda_c > 0.0 && lambda_p > 0.0) {
        return Err(DascError::param("lambda_c and lambda_p must be > 0"));
    }
    let step = spmap.step();
    let cent = spmap.centroids();
    let edges = spmap
        .adjacency()
        .into_iter()
        .map(|(m, n)| {
            let dc: f64 = features[m]
                .iter()
                .zip(&features[n])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let dp = ((cent[m][0] - cent[n][0]).powi(2) + (cent[m][1] - cent[n][1]).powi(2))
                / (step * step);
            (m, n, affinity_weight(dc, dp, lambda_c, lambda_p))
        })
        .collect();
    Ok(Affinity {
        count: spmap.count(),
        edges,
    })
}

/// The affinity kernel on squared feature and position distances.
pub fn affinity_weight(feature_dist2: f64, position_dist2: f64, lambda_c: f64, lambda_p: f64) -> f64 {
    (-feature_dist2 / lambda_c - position_dist2 / lambda_p).exp()
}

/// Sparse symmetric system `(P + mu U - mu W) x = b` restricted to a subset
/// of superpixels.
#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    pub diag: Vec<f64>,
    /// Off-diagonal entries per row as `(column, value)`.
    pub off: Vec<Vec<(usize, f64)>>,
}

impl LaplacianSystem {
    pub fn build(constrained: &[bool], affinity: &Affinity, mu: f64) -> Self {
        let n = constrained.len();
        let mut diag: Vec<f64> = constrained.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        let mut off = vec![Vec::new(); n];
        if mu > 0.0 {
            for &(m, k, w) in &affinity.edges {
                if w <= 0.0 {
                    continue;
                }
                diag[m] += mu * w;
                diag[k] += mu * w;
                off[m].push((k, -mu * w));
                off[k].push((m, -mu * w));
            }
        }
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.diag[i] * x[i] + self.off[i].iter().map(|&(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    /// `max_i |(A x - b)_i|`.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Jacobi-preconditioned conjugate gradients on the rows in `active`,
    /// with every other unknown held at its value in `x`.
    fn solve_cg(&self, b: &[f64], x: &mut [f64], active: &[usize], tol: f64, max_iter: usize) -> usize {
        let n = self.len();
        let mut in_set = vec![false; n];
        for &i in active {
            in_set[i] = true;
        }
        let apply_active = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for &i in active {
                out[i] = self.diag[i] * v[i]
                    + self.off[i]
                        .iter()
                        .filter(|(j, _)| in_set[*j])
                        .map(|&(j, a)| a * v[j])
                        .sum::<f64>();
            }
            out
        };
        // fold the fixed unknowns into the right-hand side
        let mut rhs = vec![0.0; n];
        for &i in active {
            rhs[i] = b[i]
                - self.off[i]
                    .iter()
                    .filter(|(j, _)| !in_set[*j])
                    .map(|&(j, a)| a * x[j])
                    .sum::<f64>();
        }
        let dot = |a: &[f64], c: &[f64]| active.iter().map(|&i| a[i] * c[i]).sum::<f64>();
        let ax = apply_active(x);
        let mut r = vec![0.0; n];
        for &i in active {
            r[i] = rhs[i] - ax[i];
        }
        let b_norm = dot(&rhs, &rhs).sqrt().max(1e-300);
        let mut z = vec![0.0; n];
        for &i in active {
            z[i] = r[i] / self.diag[i];
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut iters = 0;
        while iters < max_iter && dot(&r, &r).sqrt() > tol * b_norm {
            let ap = apply_active(&p);
            let alpha = rz / dot(&p, &ap);
            for &i in active {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for &i in active {
                p[i] = z[i] + beta * p[i];
            }
            iters += 1;
        }
        iters
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationStatus {
    Ok,
    /// No superpixel carried a constraint; unit fields were returned.
    NoConstraints,
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub fields: GeometricFieldMap,
    pub status: PropagationStatus,
    /// Largest infinity-norm residual over the three solved fields.
    pub residual: f64,
    pub iterations: usize,
}

/// Connected components of the graph formed by positive-weight edges.
fn graph_components(count: usize, affinity: &Affinity, use_edges: bool) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..count).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    if use_edges {
        for &(m, n, w) in &affinity.edges {
            if w > 0.0 {
                let (a, b) = (find(&mut parent, m), find(&mut parent, n));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..count).map(|i| find(&mut parent, i)).collect()
}

/// Solves `(P + mu U - mu W) G = P G*` for log-scale, `cos theta` and
/// `sin theta`, then recombines them. Superpixels in graph components with
/// no constraint take the mean of all constrained values.
pub fn propagate(fields: &GeometricFieldMap, affinity: &Affinity, mu: f64) -> Result<Propagation> {
    fields.validate()?;
    let n = fields.len();
    if affinity.count != n {
        return Err(DascError::dim(format!(
            "affinity over {} superpixels, fields over {n}",
            affinity.count
        )));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(DascError::param("mu must be finite and >= 0"));
    }
    let anchors: Vec<usize> = (0..n).filter(|&m| fields.constrained[m]).collect();
    if anchors.is_empty() {
        log::warn!("no constrained superpixels; using unit geometric fields");
        return Ok(Propagation {
            fields: GeometricFieldMap::unit(n),
            status: PropagationStatus::NoConstraints,
            residual: 0.0,
            iterations: 0,
        });
    }

    let targets: [Vec<f64>; 3] = [
        fields.g_rho.iter().map(|r| r.ln()).collect(),
        fields.g_theta.iter().map(|t| t.cos()).collect(),
        fields.g_theta.iter().map(|t| t.sin()).collect(),
    ];
    let comp = graph_components(n, affinity, mu > 0.0);
    let mut anchored = vec![false; n];
    for &m in &anchors {
        anchored[comp[m]] = true;
    }
    let active: Vec<usize> = (0..n).filter(|&m| anchored[comp[m]]).collect();
    let system = LaplacianSystem::build(&fields.constrained, affinity, mu);
    let max_iter = 10 * n.max(1);

    let solved: Vec<(Vec<f64>, usize, f64)> = targets
        .par_iter()
        .map(|t| {
            let b: Vec<f64> = (0..n)
                .map(|m| if fields.constrained[m] { t[m] } else { 0.0 })
                .collect();
            let mean = anchors.iter().map(|&m| t[m]).sum::<f64>() / anchors.len() as f64;
            let mut x = vec![mean; n];
            let iters = system.solve_cg(&b, &mut x, &active, 1e-8, max_iter);
            // floating superpixels sit outside the system and keep the mean
            let ax = system.apply(&x);
            let r = active
                .iter()
                .map(|&m| (ax[m] - b[m]).abs())
                .fold(0.0, f64::max);
            (x, iters, r)
        })
        .collect();

    let residual = solved.iter().map(|s| s.2).fold(0.0, f64::max);
    let iterations = solved.iter().map(|s| s.1).max().unwrap_or(0);
    let [log_rho, cos_t, sin_t] = [&solved[0].0, &solved[1].0, &solved[2].0];

    let out = GeometricFieldMap {
        g_rho: log_rho.iter().map(|v| v.exp()).collect(),
        g_theta: cos_t
            .iter()
            .zip(sin_t)
            .map(|(c, s)| wrap_angle(s.atan2(*c)))
            .collect(),
        constrained: fields.constrained.clone(),
    };
    Ok(Propagation {
        fields: out,
        status: PropagationStatus::Ok,
        residual,
        iterations,
    })
}

/// Expands per-superpixel values to a per-pixel image.
pub fn field_image(spmap: &SuperpixelMap, values: &[f64]) -> Result<Image> {
    Image::new(
        spmap.width(),
        spmap.height(),
        spmap.labels().iter().map(|&l| values[l as usize]).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_mean_wraps() {
        let m = circular_mean(&[350f64.to_radians(), 10f64.to_radians()]);
        assert_eq!(m, 0.0);
        let m = circular_mean(&[30f64.to_radians()]);
        assert!((m - 30f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn affinity_kernel_values() {
        assert_eq!(affinity_weight(0.0, 0.0, 0.1, 30.0), 1.0);
        assert!((affinity_weight(0.1, 30.0, 0.1, 30.0) - (-2f64).exp()).abs() < 1e-15);
    }
}
