//! Offline selection of sampling patterns.
//!
//! Each training pair of support windows is described by one feature per
//! candidate pattern: how much the two windows agree on that pattern's
//! center-pixel response. A linear SVM separates matching from non-matching
//! pairs, and the candidates with the largest weight magnitudes become the
//! descriptor's patterns.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dasc::{robust_similarity, DascParams};
use crate::error::{DascError, Result};
use crate::image::Image;
use crate::oracle::{asymmetric_correlation, kernel_weights, KernelWeights};
use crate::pattern::{Offset, SamplingPatternSet};

/// Two `M x M` support windows and whether they depict the same point.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub window_a: Image,
    pub window_b: Image,
    pub matched: bool,
}

/// Linear decision function `v . r + b`, one weight per candidate pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision(&self, features: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(features)
            .map(|(v, r)| v * r)
            .sum::<f64>()
            + self.bias
    }

    /// `||v||^2 + C * sum_h hinge(y_h * Q(r_h))` with labels in {-1, +1}.
    pub fn objective(&self, features: &[Vec<f64>], labels: &[bool], c_svm: f64) -> f64 {
        let reg: f64 = self.weights.iter().map(|v| v * v).sum();
        let loss: f64 = features
            .iter()
            .zip(labels)
            .map(|(r, &l)| hinge(sign(l) * self.decision(r)))
            .sum();
        reg + c_svm * loss
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(r, &l)| (self.decision(r) > 0.0) == l)
            .count();
        correct as f64 / features.len().max(1) as f64
    }
}

#[inline]
fn hinge(x: f64) -> f64 {
    (1.0 - x).max(0.0)
}

#[inline]
fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// Center-pixel robust similarity of every candidate on one window.
fn center_responses(
    window: &Image,
    candidates: &SamplingPatternSet,
    params: &DascParams,
) -> Vec<f64> {
    let c = (window.width() / 2) as isize;
    let radius = params.patch_radius();
    let mut cache: HashMap<Offset, KernelWeights> = HashMap::new();
    candidates
        .pairs()
        .iter()
        .map(|pair| {
            let weights = cache.entry(pair.s).or_insert_with(|| {
                let sx = (c + pair.s[0]).clamp(0, window.width() as isize - 1) as usize;
                let sy = (c + pair.s[1]).clamp(0, window.height() as isize - 1) as usize;
                kernel_weights(window, params.weighting, radius, sx, sy)
            });
            let psi = asymmetric_correlation(window, weights, pair.delta());
            robust_similarity(psi, params.sigma_c, params.tau_c)
        })
        .collect()
}

/// Per-candidate agreement `exp(-(d1 - d2)^2 / (2 sigma_r^2))`, in `(0, 1]`.
pub fn build_pair_features(
    pair: &TrainingPair,
    candidates: &SamplingPatternSet,
    params: &DascParams,
    sigma_r: f64,
) -> Result<Vec<f64>> {
    params.validate()?;
    let m = params.support_size;
    for (name, win) in [("window_a", &pair.window_a), ("window_b", &pair.window_b)] {
        if win.width() != m || win.height() != m {
            return Err(DascError::dim(format!(
                "{name} is {}x{}, expected {m}x{m}",
                win.width(),
                win.height()
            )));
        }
    }
    if candidates.max_extent() > params.pattern_limit() {
        return Err(DascError::param("candidate patterns exceed the support window"));
    }
    if !(sigma_r > 0.0) {
        return Err(DascError::param("sigma_r must be > 0"));
    }
    let d1 = center_responses(&pair.window_a, candidates, params);
    let d2 = center_responses(&pair.window_b, candidates, params);
    Ok(pair_agreement(&d1, &d2, sigma_r))
}

/// Gaussian agreement between two response vectors.
pub fn pair_agreement(d1: &[f64], d2: &[f64], sigma_r: f64) -> Vec<f64> {
    d1.iter()
        .zip(d2)
        .map(|(a, b)| (-(a - b) * (a - b) / (2.0 * sigma_r * sigma_r)).exp())
        .collect()
}

/// Features for a whole training set, in parallel over pairs.
pub fn build_training_features(
    pairs: &[TrainingPair],
    candidates: &SamplingPatternSet,
    params: &DascParams,
    sigma_r: f64,
) -> Result<Vec<Vec<f64>>> {
    pairs
        .par_iter()
        .map(|p| build_pair_features(p, candidates, params, sigma_r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c_svm: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c_svm: 1.0,
            epochs: 50,
            seed: 0,
        }
    }
}

/// Trained model plus the objective of each epoch's averaged iterate.
#[derive(Debug, Clone)]
pub struct SvmTraining {
    pub model: SvmModel,
    pub epoch_objectives: Vec<f64>,
}

/// Stochastic subgradient descent on `||v||^2 + C sum hinge`.
///
/// Steps follow the `1 / (lambda t)` schedule with `lambda = 2 / (C n)` and a
/// projection onto the ball that contains the optimum. The bias rides along
/// as a weight on a constant feature. Each epoch visits the examples in a
/// seeded shuffle; the iterate averaged over an epoch is scored, and the best
/// scored average is returned, so the reported objective never increases.
pub fn train_linear_svm(
    features: &[Vec<f64>],
    labels: &[bool],
    config: SvmConfig,
) -> Result<SvmTraining> {
    if features.len() != labels.len() {
        return Err(DascError::dim(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 {
        return Err(DascError::Degenerate("need at least two training examples".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(DascError::Degenerate(
            "training labels contain a single class".into(),
        ));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(DascError::dim("feature vectors have differing lengths"));
    }
    if !(config.c_svm >= 0.0) || !config.c_svm.is_finite() {
        return Err(DascError::param("C must be finite and >= 0"));
    }
    if config.epochs == 0 {
        return Err(DascError::param("epochs must be >= 1"));
    }

    let zero = SvmModel::zeros(dim);
    if config.c_svm == 0.0 {
        return Ok(SvmTraining {
            model: zero,
            epoch_objectives: vec![0.0],
        });
    }

    let n = features.len();
    let lambda = 2.0 / (config.c_svm * n as f64);
    let radius = 1.0 / lambda.sqrt();
    // weights[dim] is the bias, paired with a constant feature of 1
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = 0usize;

    let mut best = zero.clone();
    let mut best_obj = zero.objective(features, labels, config.c_svm);
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut avg = vec![0.0; dim + 1];
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = sign(labels[i]);
            let x = &features[i];
            let margin = y * (w[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xi) in w[..dim].iter_mut().zip(x) {
                    *v += eta * y * xi;
                }
                w[dim] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += v;
            }
        }
        avg.iter_mut().for_each(|a| *a /= n as f64);
        let candidate = SvmModel {
            weights: avg[..dim].to_vec(),
            bias: avg[dim],
        };
        let obj = candidate.objective(features, labels, config.c_svm);
        if obj < best_obj {
            best_obj = obj;
            best = candidate;
        }
        history.push(best_obj);
    }
    Ok(SvmTraining {
        model: best,
        epoch_objectives: history,
    })
}

/// The `l_out` candidates with the largest `|v_l|`, ties by candidate index.
/// The returned set carries `|v_l|` as its per-pattern weight.
pub fn select_top_patterns(
    model: &SvmModel,
    candidates: &SamplingPatternSet,
    l_out: usize,
) -> Result<SamplingPatternSet> {
    if l_out == 0 {
        return Err(DascError::param("must select at least one pattern"));
    }
    if model.weights.len() != candidates.len() {
        return Err(DascError::dim(format!(
            "model has {} weights for {} candidates",
            model.weights.len(),
            candidates.len()
        )));
    }
    if l_out > candidates.len() {
        return Err(DascError::param(format!(
            "cannot select {l_out} of {} candidates",
            candidates.len()
        )));
    }
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (model.weights[a].abs(), model.weights[b].abs());
        vb.partial_cmp(&va).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    idx.truncate(l_out);
    let chosen = candidates.select(&idx)?;
    let weights = idx.iter().map(|&i| model.weights[i].abs()).collect();
    SamplingPatternSet::with_weights(chosen.pairs().to_vec(), weights)
}
