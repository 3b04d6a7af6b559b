//! Python bindings. Images are 2D sequences of floats (rows), so nested lists
//! and numpy arrays both work.

use std::path::PathBuf;

use dasc_core::config::RunConfig;
use dasc_core::dasc::compute_dasc;
use dasc_core::error::DascError;
use dasc_core::formats;
use dasc_core::geofield::{
    appearance_features_gray, fit_sparse_fields, propagate, superpixel_affinity,
    GeometricFieldMap,
};
use dasc_core::gidasc::compute_gi_dasc;
use dasc_core::image::Image;
use dasc_core::learn::{build_training_features, select_top_patterns, train_linear_svm, TrainingPair};
use dasc_core::lss::compute_lss;
use dasc_core::matching;
use dasc_core::oracle::compute_dasc_oracle;
use dasc_core::pattern::{enumerate_candidate_patterns, random_patterns, PatternPair, SamplingPatternSet};
use dasc_core::superpixel::{segment_superpixels, SuperpixelMap};
use dasc_core::wmsd::{detect_wmsd, Keypoint as CoreKeypoint};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: DascError) -> PyErr {
    match e {
        DascError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn image_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Image> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("image rows differ in length"));
    }
    Image::new(w, h, rows.concat()).map_err(err)
}

fn image_to_rows(img: &Image) -> Vec<Vec<f64>> {
    img.data().chunks(img.width()).map(<[f64]>::to_vec).collect()
}

fn grid_of<T: Clone>(w: usize, values: &[T]) -> Vec<Vec<T>> {
    values.chunks(w).map(<[T]>::to_vec).collect()
}

fn cfg_or_default(config: Option<&Config>) -> RunConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Run configuration keyed like the `dasc` tool, e.g. `dasc.dim`.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Config {
    inner: RunConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<std::collections::HashMap<String, Bound<'_, PyAny>>>) -> PyResult<Self> {
        let mut inner = RunConfig::default();
        for (k, v) in overrides.unwrap_or_default() {
            inner.set(&k.replacen("__", ".", 1), &v.str()?.to_string()).map_err(err)?;
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn set(&mut self, key: &str, value: Bound<'_, PyAny>) -> PyResult<()> {
        self.inner.set(key, &value.str()?.to_string()).map_err(err)
    }

    fn get(&self, key: &str) -> PyResult<String> {
        self.inner
            .entries()
            .into_iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
            .ok_or_else(|| PyValueError::new_err(format!("unknown configuration key '{key}'")))
    }

    #[staticmethod]
    fn keys() -> Vec<&'static str> {
        RunConfig::KEYS.to_vec()
    }

    fn __repr__(&self) -> String {
        self.inner.serialize()
    }
}

/// Ordered sampling patterns `(s, t)` with integer offsets.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Patterns {
    inner: SamplingPatternSet,
}

#[pymethods]
impl Patterns {
    #[new]
    fn new(pairs: Vec<((isize, isize), (isize, isize))>) -> PyResult<Self> {
        let pairs = pairs
            .into_iter()
            .map(|(s, t)| PatternPair { s: [s.0, s.1], t: [t.0, t.1] })
            .collect();
        Ok(Self { inner: SamplingPatternSet::new(pairs).map_err(err)? })
    }

    /// Every candidate pair of the configured log-polar grid.
    #[staticmethod]
    #[pyo3(signature = (config=None))]
    fn candidates(config: Option<&Config>) -> PyResult<Self> {
        let grid = cfg_or_default(config).grid().map_err(err)?;
        Ok(Self { inner: enumerate_candidate_patterns(&grid) })
    }

    /// `dasc.dim` seeded random candidates.
    #[staticmethod]
    #[pyo3(signature = (config=None))]
    fn random(config: Option<&Config>) -> PyResult<Self> {
        let cfg = cfg_or_default(config);
        let cands = enumerate_candidate_patterns(&cfg.grid().map_err(err)?);
        let count = cfg.dim.min(cands.len());
        Ok(Self { inner: random_patterns(&cands, count, cfg.seed).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: formats::read_patterns(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        formats::write_patterns(&path, &self.inner).map_err(err)
    }

    fn pairs(&self) -> Vec<((isize, isize), (isize, isize))> {
        self.inner
            .pairs()
            .iter()
            .map(|p| ((p.s[0], p.s[1]), (p.t[0], p.t[1])))
            .collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Dense `height x width x dim` descriptors.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Descriptors {
    inner: dasc_core::dasc::DescriptorField,
}

#[pymethods]
impl Descriptors {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<Vec<f64>> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel outside the field"));
        }
        Ok(self.inner.get(x, y).to_vec())
    }

    /// Nested `[y][x][k]` lists.
    fn to_list(&self) -> Vec<Vec<Vec<f64>>> {
        let d = self.inner.dim();
        self.inner
            .values()
            .chunks(self.inner.width() * d)
            .map(|row| row.chunks(d).map(<[f64]>::to_vec).collect())
            .collect()
    }

    /// Euclidean distance between `(x, y)` here and `(ox, oy)` in `other`.
    fn distance(&self, x: usize, y: usize, other: &Descriptors, ox: usize, oy: usize) -> PyResult<f64> {
        if self.inner.dim() != other.inner.dim()
            || x >= self.inner.width()
            || y >= self.inner.height()
            || ox >= other.inner.width()
            || oy >= other.inner.height()
        {
            return Err(PyValueError::new_err("pixel outside the field or dimensions differ"));
        }
        Ok(self.inner.distance_sq(x, y, &other.inner, ox, oy).sqrt())
    }

    fn max_abs_diff(&self, other: &Descriptors) -> PyResult<f64> {
        if !self.inner.same_shape(&other.inner) {
            return Err(PyValueError::new_err("descriptor fields differ in shape"));
        }
        Ok(self.inner.max_abs_diff(&other.inner))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: formats::read_descriptors(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        formats::write_descriptors(&path, &self.inner).map_err(err)
    }
}

/// WMSD keypoint: position, scale `rho` and orientation `theta` in radians.
#[pyclass(module = "dasc", get_all, from_py_object)]
#[derive(Clone)]
pub struct Keypoint {
    x: usize,
    y: usize,
    rho: f64,
    theta: f64,
    level: usize,
    degenerate: bool,
}

impl From<&CoreKeypoint> for Keypoint {
    fn from(k: &CoreKeypoint) -> Self {
        Self { x: k.x, y: k.y, rho: k.rho, theta: k.theta, level: k.level, degenerate: k.degenerate }
    }
}

impl From<&Keypoint> for CoreKeypoint {
    fn from(k: &Keypoint) -> Self {
        Self { x: k.x, y: k.y, rho: k.rho, theta: k.theta, level: k.level, degenerate: k.degenerate }
    }
}

#[pymethods]
impl Keypoint {
    #[new]
    #[pyo3(signature = (x, y, rho, theta, level=0, degenerate=false))]
    fn new(x: usize, y: usize, rho: f64, theta: f64, level: usize, degenerate: bool) -> Self {
        Self { x, y, rho, theta, level, degenerate }
    }

    fn __repr__(&self) -> String {
        format!("Keypoint(x={}, y={}, rho={}, theta={})", self.x, self.y, self.rho, self.theta)
    }
}

/// Superpixel label map.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Superpixels {
    inner: SuperpixelMap,
}

#[pymethods]
impl Superpixels {
    #[new]
    fn new(labels: Vec<Vec<u32>>) -> PyResult<Self> {
        let h = labels.len();
        let w = labels.first().map_or(0, Vec::len);
        if labels.iter().any(|r| r.len() != w) {
            return Err(PyValueError::new_err("label rows differ in length"));
        }
        Ok(Self { inner: SuperpixelMap::from_labels(w, h, labels.concat()).map_err(err)? })
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.count()
    }

    fn labels(&self) -> Vec<Vec<u32>> {
        grid_of(self.inner.width(), self.inner.labels())
    }

    fn centroids(&self) -> Vec<(f64, f64)> {
        self.inner.centroids().iter().map(|c| (c[0], c[1])).collect()
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: formats::read_labels(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        formats::write_labels(&path, &self.inner).map_err(err)
    }
}

/// Per-superpixel scale `g_rho` and rotation `g_theta`.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Fields {
    inner: GeometricFieldMap,
}

#[pymethods]
impl Fields {
    #[new]
    #[pyo3(signature = (g_rho, g_theta, constrained=None))]
    fn new(g_rho: Vec<f64>, g_theta: Vec<f64>, constrained: Option<Vec<bool>>) -> PyResult<Self> {
        let n = g_rho.len();
        let inner = GeometricFieldMap {
            g_rho,
            g_theta,
            constrained: constrained.unwrap_or_else(|| vec![false; n]),
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (count, g_rho=1.0, g_theta=0.0))]
    fn uniform(count: usize, g_rho: f64, g_theta: f64) -> Self {
        Self { inner: GeometricFieldMap::uniform(count, g_rho, g_theta) }
    }

    #[getter]
    fn g_rho(&self) -> Vec<f64> {
        self.inner.g_rho.clone()
    }

    #[getter]
    fn g_theta(&self) -> Vec<f64> {
        self.inner.g_theta.clone()
    }

    #[getter]
    fn constrained(&self) -> Vec<bool> {
        self.inner.constrained.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: formats::read_fields(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        formats::write_fields(&path, &self.inner).map_err(err)
    }
}

/// Dense disparity with a validity mask.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Disparity {
    inner: matching::DisparityMap,
}

#[pymethods]
impl Disparity {
    #[new]
    #[pyo3(signature = (values, valid=None))]
    fn new(values: Vec<Vec<f64>>, valid: Option<Vec<Vec<bool>>>) -> PyResult<Self> {
        let img = image_from_rows(values)?;
        let valid = valid.map_or_else(|| img.data().iter().map(|v| v.is_finite()).collect(), |v| v.concat());
        let inner = matching::DisparityMap::new(img.width(), img.height(), img.into_data(), valid).map_err(err)?;
        Ok(Self { inner })
    }

    fn values(&self) -> Vec<Vec<f64>> {
        grid_of(self.inner.width, &self.inner.values)
    }

    fn valid(&self) -> Vec<Vec<bool>> {
        grid_of(self.inner.width, &self.inner.valid)
    }

    /// `.pfm`, otherwise 16-bit PGM scaled by `scale`.
    #[staticmethod]
    #[pyo3(signature = (path, scale=256.0))]
    fn load(path: PathBuf, scale: f64) -> PyResult<Self> {
        Ok(Self { inner: formats::read_disparity(&path, scale).map_err(err)? })
    }

    #[pyo3(signature = (path, scale=256.0))]
    fn save(&self, path: PathBuf, scale: f64) -> PyResult<()> {
        formats::write_disparity(&path, &self.inner, scale).map_err(err)
    }
}

/// Dense flow `(u, v)` with a validity mask.
#[pyclass(module = "dasc", from_py_object)]
#[derive(Clone)]
pub struct Flow {
    inner: matching::FlowField,
}

#[pymethods]
impl Flow {
    #[new]
    #[pyo3(signature = (u, v, valid=None))]
    fn new(u: Vec<Vec<f64>>, v: Vec<Vec<f64>>, valid: Option<Vec<Vec<bool>>>) -> PyResult<Self> {
        let u = image_from_rows(u)?;
        let v = image_from_rows(v)?;
        if !u.same_dims(&v) {
            return Err(PyValueError::new_err("u and v differ in size"));
        }
        let values: Vec<[f64; 2]> = u.data().iter().zip(v.data()).map(|(&a, &b)| [a, b]).collect();
        let valid = valid.map_or_else(|| vec![true; values.len()], |v| v.concat());
        let inner = matching::FlowField::new(u.width(), u.height(), values, valid).map_err(err)?;
        Ok(Self { inner })
    }

    fn u(&self) -> Vec<Vec<f64>> {
        let u: Vec<f64> = self.inner.values.iter().map(|p| p[0]).collect();
        grid_of(self.inner.width, &u)
    }

    fn v(&self) -> Vec<Vec<f64>> {
        let v: Vec<f64> = self.inner.values.iter().map(|p| p[1]).collect();
        grid_of(self.inner.width, &v)
    }

    fn valid(&self) -> Vec<Vec<bool>> {
        grid_of(self.inner.width, &self.inner.valid)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: formats::read_flo(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        formats::write_flo(&path, &self.inner).map_err(err)
    }
}

/// Grayscale image in `[0, 1]` as rows.
#[pyfunction]
fn load_image(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    Ok(image_to_rows(&formats::load_gray(&path).map_err(err)?))
}

#[pyfunction]
fn save_image(path: PathBuf, image: Vec<Vec<f64>>) -> PyResult<()> {
    formats::save_gray_png(&path, &image_from_rows(image)?).map_err(err)
}

/// DASC descriptors; random patterns from the grid when none are given.
#[pyfunction]
#[pyo3(name = "compute_dasc", signature = (image, patterns=None, config=None, oracle=false))]
fn py_compute_dasc(
    py: Python<'_>,
    image: Vec<Vec<f64>>,
    patterns: Option<&Patterns>,
    config: Option<&Config>,
    oracle: bool,
) -> PyResult<Descriptors> {
    let img = image_from_rows(image)?;
    let cfg = cfg_or_default(config);
    let params = cfg.dasc_params().map_err(err)?;
    let pats = match patterns {
        Some(p) => p.inner.clone(),
        None => Patterns::random(config)?.inner,
    };
    let inner = py
        .detach(|| {
            if oracle {
                compute_dasc_oracle(&img, &pats, &params, false)
            } else {
                compute_dasc(&img, &pats, &params)
            }
        })
        .map_err(err)?;
    Ok(Descriptors { inner })
}

/// Local self-similarity baseline.
#[pyfunction]
#[pyo3(name = "compute_lss", signature = (image, config=None))]
fn py_compute_lss(py: Python<'_>, image: Vec<Vec<f64>>, config: Option<&Config>) -> PyResult<Descriptors> {
    let img = image_from_rows(image)?;
    let params = cfg_or_default(config).lss_params();
    let inner = py.detach(|| compute_lss(&img, &params)).map_err(err)?;
    Ok(Descriptors { inner })
}

#[pyfunction]
#[pyo3(name = "detect_wmsd", signature = (image, config=None))]
fn py_detect_wmsd(py: Python<'_>, image: Vec<Vec<f64>>, config: Option<&Config>) -> PyResult<Vec<Keypoint>> {
    let img = image_from_rows(image)?;
    let params = cfg_or_default(config).wmsd_params().map_err(err)?;
    let kps = py.detach(|| detect_wmsd(&img, &params)).map_err(err)?;
    Ok(kps.iter().map(Keypoint::from).collect())
}

#[pyfunction]
#[pyo3(name = "segment_superpixels", signature = (image, config=None))]
fn py_segment_superpixels(py: Python<'_>, image: Vec<Vec<f64>>, config: Option<&Config>) -> PyResult<Superpixels> {
    let img = image_from_rows(image)?;
    let params = cfg_or_default(config).slic_params();
    let inner = py.detach(|| segment_superpixels(&img, &params)).map_err(err)?;
    Ok(Superpixels { inner })
}

/// Sparse fit from keypoints, then propagation over the superpixel graph.
#[pyfunction]
#[pyo3(signature = (image, superpixels, keypoints, config=None))]
fn propagate_fields(
    image: Vec<Vec<f64>>,
    superpixels: &Superpixels,
    keypoints: Vec<Keypoint>,
    config: Option<&Config>,
) -> PyResult<Fields> {
    let img = image_from_rows(image)?;
    let cfg = cfg_or_default(config);
    let sp = &superpixels.inner;
    let kps: Vec<CoreKeypoint> = keypoints.iter().map(CoreKeypoint::from).collect();
    let sparse = fit_sparse_fields(&kps, sp, cfg.wmsd_base_sigma).map_err(err)?;
    let feats = appearance_features_gray(sp, &img).map_err(err)?;
    let aff = superpixel_affinity(sp, &feats, cfg.lambda_c, cfg.lambda_p).map_err(err)?;
    let out = propagate(&sparse, &aff, cfg.mu).map_err(err)?;
    Ok(Fields { inner: out.fields })
}

/// Geometry-invariant descriptors from per-superpixel fields.
#[pyfunction]
#[pyo3(name = "compute_gi_dasc", signature = (image, superpixels, fields, patterns=None, config=None))]
fn py_compute_gi_dasc(
    py: Python<'_>,
    image: Vec<Vec<f64>>,
    superpixels: &Superpixels,
    fields: &Fields,
    patterns: Option<&Patterns>,
    config: Option<&Config>,
) -> PyResult<Descriptors> {
    let img = image_from_rows(image)?;
    let cfg = cfg_or_default(config);
    let params = cfg.dasc_params().map_err(err)?;
    let pats = match patterns {
        Some(p) => p.inner.clone(),
        None => Patterns::random(config)?.inner,
    };
    let (sp, f) = (&superpixels.inner, &fields.inner);
    let inner = py
        .detach(|| compute_gi_dasc(&img, sp, f, &pats, &params, cfg.blur))
        .map_err(err)?;
    Ok(Descriptors { inner })
}

#[pyfunction]
fn match_stereo(py: Python<'_>, left: &Descriptors, right: &Descriptors, max_disp: usize) -> PyResult<Disparity> {
    let inner = py
        .detach(|| matching::match_stereo_wta(&left.inner, &right.inner, max_disp))
        .map_err(err)?;
    Ok(Disparity { inner })
}

#[pyfunction]
fn match_flow(py: Python<'_>, a: &Descriptors, b: &Descriptors, radius: usize) -> PyResult<Flow> {
    let inner = py
        .detach(|| matching::match_flow_wta(&a.inner, &b.inner, radius))
        .map_err(err)?;
    Ok(Flow { inner })
}

fn mask_or(mask: Option<Vec<Vec<bool>>>, default: &[bool]) -> Vec<bool> {
    mask.map_or_else(|| default.to_vec(), |m| m.concat())
}

/// Fraction of masked pixels with `|d - d_gt| > threshold`.
#[pyfunction]
#[pyo3(signature = (est, gt, threshold=1.0, mask=None))]
fn bad_pixel_rate(est: &Disparity, gt: &Disparity, threshold: f64, mask: Option<Vec<Vec<bool>>>) -> PyResult<f64> {
    let mask = mask_or(mask, &gt.inner.valid);
    matching::bad_pixel_rate(&est.inner, &gt.inner, threshold, &mask).map_err(err)
}

/// Mean endpoint error over masked pixels.
#[pyfunction]
#[pyo3(signature = (est, gt, mask=None))]
fn endpoint_error(est: &Flow, gt: &Flow, mask: Option<Vec<Vec<bool>>>) -> PyResult<f64> {
    let mask = mask_or(mask, &gt.inner.valid);
    matching::endpoint_error(&est.inner, &gt.inner, &mask).map_err(err)
}

#[pyfunction]
fn label_transfer_error(est: Vec<Vec<u32>>, gt: Vec<Vec<u32>>) -> PyResult<f64> {
    matching::label_transfer_error(&est.concat(), &gt.concat()).map_err(err)
}

/// Labels of B pulled back to A along the flow.
#[pyfunction]
fn transfer_labels(flow: &Flow, labels_b: Vec<Vec<u32>>) -> PyResult<Vec<Vec<u32>>> {
    let out = matching::transfer_labels(&flow.inner, &labels_b.concat()).map_err(err)?;
    Ok(grid_of(flow.inner.width, &out))
}

/// Trains the pattern-selection SVM on `(window_a, window_b, matched)`
/// triples and returns `(patterns, weights, bias)`.
#[pyfunction]
#[pyo3(signature = (pairs, count, candidates=None, config=None))]
fn learn_patterns(
    py: Python<'_>,
    pairs: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, bool)>,
    count: usize,
    candidates: Option<&Patterns>,
    config: Option<&Config>,
) -> PyResult<(Patterns, Vec<f64>, f64)> {
    let cfg = cfg_or_default(config);
    let params = cfg.dasc_params().map_err(err)?;
    let cands = match candidates {
        Some(c) => c.inner.clone(),
        None => Patterns::candidates(config)?.inner,
    };
    let train = pairs
        .into_iter()
        .map(|(a, b, matched)| {
            Ok(TrainingPair { window_a: image_from_rows(a)?, window_b: image_from_rows(b)?, matched })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let (selected, model) = py
        .detach(|| {
            let feats = build_training_features(&train, &cands, &params, cfg.sigma_r)?;
            let labels: Vec<bool> = train.iter().map(|p| p.matched).collect();
            let model = train_linear_svm(&feats, &labels, cfg.svm_config())?.model;
            Ok::<_, DascError>((select_top_patterns(&model, &cands, count)?, model))
        })
        .map_err(err)?;
    Ok((Patterns { inner: selected }, model.weights, model.bias))
}

#[pymodule]
fn dasc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_class::<Patterns>()?;
    m.add_class::<Descriptors>()?;
    m.add_class::<Keypoint>()?;
    m.add_class::<Superpixels>()?;
    m.add_class::<Fields>()?;
    m.add_class::<Disparity>()?;
    m.add_class::<Flow>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(save_image, m)?)?;
    m.add_function(wrap_pyfunction!(py_compute_dasc, m)?)?;
    m.add_function(wrap_pyfunction!(py_compute_lss, m)?)?;
    m.add_function(wrap_pyfunction!(py_detect_wmsd, m)?)?;
    m.add_function(wrap_pyfunction!(py_segment_superpixels, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_fields, m)?)?;
    m.add_function(wrap_pyfunction!(py_compute_gi_dasc, m)?)?;
    m.add_function(wrap_pyfunction!(match_stereo, m)?)?;
    m.add_function(wrap_pyfunction!(match_flow, m)?)?;
    m.add_function(wrap_pyfunction!(bad_pixel_rate, m)?)?;
    m.add_function(wrap_pyfunction!(endpoint_error, m)?)?;
    m.add_function(wrap_pyfunction!(label_transfer_error, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_labels, m)?)?;
    m.add_function(wrap_pyfunction!(learn_patterns, m)?)?;
    Ok(())
}
