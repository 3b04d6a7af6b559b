//! Log-polar point sets and the sampling-pattern pairs drawn from them.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DascError, Result};

/// Integer pixel offset `[dx, dy]` relative to the described pixel.
pub type Offset = [isize; 2];

/// Center point plus `n_rho` rings of `n_theta` points each.
///
/// Ring radii form a geometric progression ending at `max_radius`. The inner
/// radius is the smallest one (searched upward from `max_radius^(1/n_rho)`)
/// at which every rounded ring point is distinct, so the set always holds
/// exactly `n_rho * n_theta + 1` integer offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPolarGrid {
    points: Vec<Offset>,
    radii: Vec<f64>,
    n_rho: usize,
    n_theta: usize,
    max_radius: usize,
}

impl LogPolarGrid {
    pub fn generate(n_rho: usize, n_theta: usize, max_radius: usize) -> Result<Self> {
        if n_rho == 0 || n_theta == 0 {
            return Err(DascError::param("log-polar grid needs n_rho >= 1 and n_theta >= 1"));
        }
        if max_radius == 0 {
            return Err(DascError::param("log-polar grid needs max_radius >= 1"));
        }
        let outer = max_radius as f64;
        let mut inner = outer.powf(1.0 / n_rho as f64);
        if n_rho == 1 {
            inner = outer;
        }
        loop {
            let radii = ring_radii(inner, outer, n_rho);
            if let Some(points) = ring_points(&radii, n_theta, outer) {
                return Ok(Self {
                    points,
                    radii,
                    n_rho,
                    n_theta,
                    max_radius,
                });
            }
            if n_rho == 1 || inner >= outer {
                return Err(DascError::param(format!(
                    "max_radius {max_radius} too small for {n_rho} distinct rings of {n_theta} points"
                )));
            }
            inner = (inner + 0.05).min(outer);
        }
    }

    /// Points in generation order: center first, then ring by ring with
    /// angles increasing from 0.
    pub fn points(&self) -> &[Offset] {
        &self.points
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn max_radius(&self) -> usize {
        self.max_radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn ring_radii(inner: f64, outer: f64, n_rho: usize) -> Vec<f64> {
    if n_rho == 1 {
        return vec![outer];
    }
    let ratio = outer / inner;
    (0..n_rho)
        .map(|r| inner * ratio.powf(r as f64 / (n_rho - 1) as f64))
        .collect()
}

/// Nearest integer point to `(x, y)` whose length does not exceed `limit`,
/// ties to the shorter point so the choice is symmetric about both axes.
fn round_within(x: f64, y: f64, limit: f64) -> Offset {
    let p = [x.round() as isize, y.round() as isize];
    let len2 = |q: &Offset| (q[0] * q[0] + q[1] * q[1]) as f64;
    if len2(&p) <= limit * limit + 1e-9 {
        return p;
    }
    let mut best = [x.trunc() as isize, y.trunc() as isize];
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for cx in [x.floor(), x.ceil()] {
        for cy in [y.floor(), y.ceil()] {
            let q = [cx as isize, cy as isize];
            let key = (snap((cx - x).powi(2) + (cy - y).powi(2)), len2(&q));
            if len2(&q) <= limit * limit + 1e-9 && key < best_key {
                best = q;
                best_key = key;
            }
        }
    }
    best
}

/// Removes trigonometric noise so mirrored ring points round alike.
fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

fn ring_points(radii: &[f64], n_theta: usize, limit: f64) -> Option<Vec<Offset>> {
    let mut seen = HashSet::new();
    let mut points = vec![[0, 0]];
    seen.insert([0isize, 0isize]);
    for &rho in radii {
        for a in 0..n_theta {
            let theta = 2.0 * PI * a as f64 / n_theta as f64;
            let p = round_within(snap(rho * theta.cos()), snap(rho * theta.sin()), limit);
            if !seen.insert(p) {
                return None;
            }
            points.push(p);
        }
    }
    Some(points)
}

/// One descriptor slot: patch centers `s` and `t` relative to the pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternPair {
    pub s: Offset,
    pub t: Offset,
}

impl PatternPair {
    /// Offset from source to target patch, `t - s`.
    pub fn delta(&self) -> Offset {
        [self.t[0] - self.s[0], self.t[1] - self.s[1]]
    }

    /// Largest Chebyshev extent of either endpoint.
    pub fn extent(&self) -> usize {
        self.s
            .iter()
            .chain(self.t.iter())
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

/// Ordered sampling patterns shared by every pixel, with an optional score
/// per pair (the learned weight magnitude when produced by training).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPatternSet {
    pairs: Vec<PatternPair>,
    weights: Vec<f64>,
}

impl SamplingPatternSet {
    pub fn new(pairs: Vec<PatternPair>) -> Result<Self> {
        let weights = vec![1.0; pairs.len()];
        Self::with_weights(pairs, weights)
    }

    pub fn with_weights(pairs: Vec<PatternPair>, weights: Vec<f64>) -> Result<Self> {
        if pairs.len() != weights.len() {
            return Err(DascError::dim(format!(
                "{} pattern pairs but {} weights",
                pairs.len(),
                weights.len()
            )));
        }
        if let Some(l) = pairs.iter().position(|p| p.s == p.t) {
            return Err(DascError::param(format!("pattern {l} has identical endpoints")));
        }
        Ok(Self { pairs, weights })
    }

    pub fn pairs(&self) -> &[PatternPair] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn max_extent(&self) -> usize {
        self.pairs.iter().map(PatternPair::extent).max().unwrap_or(0)
    }

    /// Largest Euclidean endpoint length.
    pub fn max_radius(&self) -> f64 {
        self.pairs
            .iter()
            .flat_map(|p| [p.s, p.t])
            .map(|o| ((o[0] * o[0] + o[1] * o[1]) as f64).sqrt())
            .fold(0.0, f64::max)
    }

    /// Distinct `t - s` offsets in first-appearance order.
    pub fn unique_deltas(&self) -> Vec<Offset> {
        let mut seen = HashSet::new();
        self.pairs
            .iter()
            .map(PatternPair::delta)
            .filter(|d| seen.insert(*d))
            .collect()
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(indices.len());
        let mut weights = Vec::with_capacity(indices.len());
        for &i in indices {
            let p = self
                .pairs
                .get(i)
                .ok_or_else(|| DascError::param(format!("pattern index {i} out of range")))?;
            pairs.push(*p);
            weights.push(self.weights[i]);
        }
        Ok(Self { pairs, weights })
    }
}

/// Every unordered pair of distinct grid points, `(points[a], points[b])`
/// with `a < b`, in lexicographic index order.
pub fn enumerate_candidate_patterns(grid: &LogPolarGrid) -> SamplingPatternSet {
    let pts = grid.points();
    let mut pairs = Vec::with_capacity(pts.len() * pts.len().saturating_sub(1) / 2);
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            pairs.push(PatternPair {
                s: pts[a],
                t: pts[b],
            });
        }
    }
    let weights = vec![1.0; pairs.len()];
    SamplingPatternSet { pairs, weights }
}

/// Seeded uniform draw of `count` candidates without replacement, returned
/// in draw order.
pub fn random_patterns(
    candidates: &SamplingPatternSet,
    count: usize,
    seed: u64,
) -> Result<SamplingPatternSet> {
    if count == 0 || count > candidates.len() {
        return Err(DascError::param(format!(
            "cannot draw {count} patterns from {} candidates",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample(&mut rng, candidates.len(), count).into_vec();
    candidates.select(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_point_count_follows_ring_formula() {
        let g = LogPolarGrid::generate(4, 36, 13).unwrap();
        assert_eq!(g.len(), 4 * 36 + 1);
        let g = LogPolarGrid::generate(1, 1, 5).unwrap();
        assert_eq!(g.points(), &[[0, 0], [5, 0]]);
    }

    #[test]
    fn grid_respects_support_window() {
        // M = 31, N = 5 leaves 15 - 2 = 13 pixels for pattern endpoints
        let limit = 31 / 2 - 5 / 2;
        let g = LogPolarGrid::generate(4, 36, limit).unwrap();
        for p in g.points() {
            let len = ((p[0] * p[0] + p[1] * p[1]) as f64).sqrt();
            assert!(len <= limit as f64 + 1e-9, "{p:?}");
        }
        let mut uniq: Vec<_> = g.points().to_vec();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), g.len());
    }

    #[test]
    fn grid_is_symmetric_under_mirror_and_quarter_turn() {
        for radius in [6, 8, 11, 13, 16, 23] {
            let g = LogPolarGrid::generate(3, 12, radius).unwrap();
            for p in g.points() {
                assert!(g.points().contains(&[-p[0], p[1]]), "{radius} {p:?}");
                assert!(g.points().contains(&[p[1], -p[0]]), "{radius} {p:?}");
            }
        }
    }

    #[test]
    fn grid_radii_are_geometric() {
        let g = LogPolarGrid::generate(3, 12, 8).unwrap();
        let r = g.radii();
        assert!((r[2] - 8.0).abs() < 1e-12);
        assert!(((r[1] / r[0]) - (r[2] / r[1])).abs() < 1e-9);
    }

    #[test]
    fn grid_too_small_is_rejected() {
        assert!(LogPolarGrid::generate(4, 36, 2).is_err());
        assert!(LogPolarGrid::generate(0, 4, 5).is_err());
    }

    #[test]
    fn candidate_count_and_distinctness() {
        let g = LogPolarGrid::generate(4, 36, 13).unwrap();
        let c = enumerate_candidate_patterns(&g);
        assert_eq!(c.len(), 145 * 144 / 2);
        assert_eq!(c.len(), 10_440);
        assert!(c.pairs().iter().all(|p| p.s != p.t));

        let g2 = LogPolarGrid::generate(1, 1, 3).unwrap();
        assert_eq!(enumerate_candidate_patterns(&g2).len(), 1);
    }

    #[test]
    fn random_selection_is_seeded() {
        let g = LogPolarGrid::generate(2, 8, 6).unwrap();
        let c = enumerate_candidate_patterns(&g);
        let a = random_patterns(&c, 20, 7).unwrap();
        let b = random_patterns(&c, 20, 7).unwrap();
        assert_eq!(a, b);
        let mut set: Vec<_> = a.pairs().to_vec();
        set.sort_by_key(|p| (p.s, p.t));
        set.dedup();
        assert_eq!(set.len(), 20);
        assert!(random_patterns(&c, 0, 1).is_err());
    }

    #[test]
    fn unique_deltas_collapse_repeats() {
        let pairs = vec![
            PatternPair { s: [0, 0], t: [1, 0] },
            PatternPair { s: [2, 2], t: [3, 2] },
            PatternPair { s: [0, 0], t: [0, 1] },
        ];
        let set = SamplingPatternSet::new(pairs).unwrap();
        assert_eq!(set.unique_deltas(), vec![[1, 0], [0, 1]]);
        assert!(SamplingPatternSet::new(vec![PatternPair { s: [1, 1], t: [1, 1] }]).is_err());
    }
}
