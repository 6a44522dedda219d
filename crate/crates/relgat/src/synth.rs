//! Seeded synthetic instances: random features, boxes, distributions, and
//! permutations. Everything is a pure function of its seed.

use crate::encoder::{feature_set_unchecked, RegionFeatureSet};
use crate::fusion::WordDistribution;
use crate::geometry::DetectedObject;
use crate::numerics::Matrix;
use crate::rng::{rng_from_seed, uniform, unit_f64};
use rand_core::RngCore;

pub const IMAGE_WIDTH: f64 = 640.0;
pub const IMAGE_HEIGHT: f64 = 480.0;

pub fn image_diag() -> f64 {
    IMAGE_WIDTH.hypot(IMAGE_HEIGHT)
}

/// `n x d` features, uniform in [-1, 1).
pub fn features(seed: u64, n: usize, d: usize) -> RegionFeatureSet {
    let mut rng = rng_from_seed(seed);
    let mut m = Matrix::zeros(n, d);
    for v in m.data_mut() {
        *v = uniform(&mut rng, -1.0, 1.0);
    }
    feature_set_unchecked(m)
}

/// Upstream gradient matrix, uniform in [-1, 1).
pub fn upstream(seed: u64, n: usize, d: usize) -> Matrix {
    features(seed, n, d).into_matrix()
}

/// Random boxes inside a `width x height` image frame.
pub fn objects(seed: u64, n: usize, width: f64, height: f64) -> Vec<DetectedObject> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let w = uniform(&mut rng, 0.03 * width, 0.4 * width);
            let h = uniform(&mut rng, 0.03 * height, 0.4 * height);
            let cx = uniform(&mut rng, 0.05 * width, 0.95 * width);
            let cy = uniform(&mut rng, 0.05 * height, 0.95 * height);
            let category = (rng.next_u64() % 80) as i64;
            DetectedObject::new(cx, cy, w, h, category).expect("synthetic box is valid")
        })
        .collect()
}

/// Per-ordered-pair 16-class distributions with a randomly placed peak, so
/// a 0.5 threshold accepts a nontrivial edge subset.
pub fn semantic_predictions(seed: u64, n: usize) -> Vec<(usize, usize, Vec<f64>)> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let class = (rng.next_u64() % 16) as usize;
            let peak = uniform(&mut rng, 0.35, 0.95);
            let rest = (1.0 - peak) / 15.0;
            let probs = (0..16).map(|c| if c == class { peak } else { rest }).collect();
            out.push((src, dst, probs));
        }
    }
    out
}

/// Random vocabulary distribution (normalized positive draws).
pub fn word_distribution(seed: u64, vocab: usize) -> WordDistribution {
    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..vocab).map(|_| unit_f64(&mut rng) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    WordDistribution::new(raw.into_iter().map(|v| v / total).collect())
        .expect("normalized draws form a distribution")
}

/// Fisher-Yates permutation of `0..n`.
pub fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    perm
}
