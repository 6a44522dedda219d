//! Convex fusion of the three per-stream word distributions and the
//! fusion-weight grid sweep.
//!
//! `fused = alpha * spatial + beta * semantic + (1 - alpha - beta) * implicit`,
//! evaluated as `implicit + alpha * (spatial - implicit) + beta *
//! (semantic - implicit)` so that identical inputs are a bit-exact fixed
//! point.

use serde::Serialize;
use thiserror::Error;

/// Normalization tolerance accepted on input distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("distribution entries must be finite and nonnegative")]
    NegativeOrNonFinite,
    #[error("distribution sums to {0}, outside 1 +/- 1e-9")]
    NotNormalized(f64),
    #[error("vocabulary sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("fusion weights need alpha >= 0, beta >= 0, alpha + beta < 1; got alpha={alpha}, beta={beta}")]
    BadWeights { alpha: f64, beta: f64 },
    #[error("sweep step must lie in (0, 1), got {0}")]
    BadStep(f64),
}

/// Probability vector over a vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordDistribution {
    probs: Vec<f64>,
}

impl WordDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, FusionError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(FusionError::NegativeOrNonFinite);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(FusionError::NotNormalized(sum));
        }
        Ok(WordDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Convex-combination coefficients for the spatial and semantic streams;
/// the implicit stream gets the remainder `1 - alpha - beta`, which must be
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionWeights {
    alpha: f64,
    beta: f64,
}

impl FusionWeights {
    pub const DEFAULT_ALPHA: f64 = 0.3;
    pub const DEFAULT_BETA: f64 = 0.3;

    pub fn new(alpha: f64, beta: f64) -> Result<Self, FusionError> {
        let ok = alpha.is_finite()
            && beta.is_finite()
            && alpha >= 0.0
            && beta >= 0.0
            && alpha + beta < 1.0;
        if !ok {
            return Err(FusionError::BadWeights { alpha, beta });
        }
        Ok(FusionWeights { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn implicit_weight(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights { alpha: Self::DEFAULT_ALPHA, beta: Self::DEFAULT_BETA }
    }
}

/// Weighted sum of the three per-stream distributions.
pub fn fuse(
    p_spa: &WordDistribution,
    p_sem: &WordDistribution,
    p_imp: &WordDistribution,
    w: &FusionWeights,
) -> Result<WordDistribution, FusionError> {
    if p_spa.len() != p_imp.len() {
        return Err(FusionError::SizeMismatch(p_spa.len(), p_imp.len()));
    }
    if p_sem.len() != p_imp.len() {
        return Err(FusionError::SizeMismatch(p_sem.len(), p_imp.len()));
    }
    let probs = p_imp
        .probs
        .iter()
        .zip(p_spa.probs.iter().zip(&p_sem.probs))
        .map(|(&imp, (&spa, &sem))| imp + w.alpha * (spa - imp) + w.beta * (sem - imp))
        .collect();
    Ok(WordDistribution { probs })
}

/// Outcome of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { score: f64 },
    Invalid,
    Error { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub a_index: usize,
    pub b_index: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

/// Grid of scores over `(alpha, beta) = (a * step, b * step)`; cells with
/// `alpha + beta >= 1` are marked invalid (the dashed region of the table
/// layout).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub step: f64,
    /// Axis values shared by rows (alpha) and columns (beta).
    pub axis: Vec<f64>,
    /// Cells in ascending `(a_index, b_index)` order.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn valid_cells(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Ok { .. }))
    }
}

/// Evaluates `scorer` over the fusion-weight grid. Scorer failures are
/// recorded per cell, not propagated.
pub fn sweep<F>(mut scorer: F, step: f64) -> Result<SweepGrid, FusionError>
where
    F: FnMut(&FusionWeights) -> Result<f64, String>,
{
    if !(step > 0.0 && step < 1.0) {
        return Err(FusionError::BadStep(step));
    }
    // largest index whose value can still pair with the smallest one
    let mut axis_max = 0usize;
    while ((axis_max + 2) as f64) * step < 1.0 - 1e-9 {
        axis_max += 1;
    }
    let axis: Vec<f64> = (1..=axis_max).map(|m| m as f64 * step).collect();

    let mut cells = Vec::with_capacity(axis_max * axis_max);
    for a in 1..=axis_max {
        for b in 1..=axis_max {
            let alpha = a as f64 * step;
            let beta = b as f64 * step;
            let outcome = if alpha + beta >= 1.0 - 1e-9 {
                CellOutcome::Invalid
            } else {
                let weights = FusionWeights::new(alpha, beta)
                    .expect("grid cell inside the weight simplex");
                match scorer(&weights) {
                    Ok(score) => CellOutcome::Ok { score },
                    Err(error) => CellOutcome::Error { error },
                }
            };
            cells.push(SweepCell { a_index: a, b_index: b, alpha, beta, outcome });
        }
    }
    Ok(SweepGrid { step, axis, cells })
}

fn axis_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Aligned text table: alpha rows, beta columns, dashes in the invalid
/// region.
pub fn render_table(grid: &SweepGrid) -> String {
    let n = grid.axis.len();
    let mut out = String::new();
    out.push_str(&format!("{:>11}", "alpha\\beta"));
    for b in &grid.axis {
        out.push_str(&format!("{:>9}", axis_label(*b)));
    }
    out.push('\n');
    for a in 0..n {
        out.push_str(&format!("{:>11}", axis_label(grid.axis[a])));
        for b in 0..n {
            let cell = &grid.cells[a * n + b];
            let text = match &cell.outcome {
                CellOutcome::Ok { score } => format!("{score:.2}"),
                CellOutcome::Invalid => "-".to_string(),
                CellOutcome::Error { .. } => "err".to_string(),
            };
            out.push_str(&format!("{text:>9}"));
        }
        out.push('\n');
    }
    out
}

/// Synthetic scorer with a single maximum at `(alpha0, beta0)`.
pub fn peaked_scorer(alpha0: f64, beta0: f64) -> impl Fn(&FusionWeights) -> Result<f64, String> {
    move |w| {
        Ok(107.02 - 30.0 * ((w.alpha() - alpha0).powi(2) + (w.beta() - beta0).powi(2)))
    }
}

pub fn constant_scorer(value: f64) -> impl Fn(&FusionWeights) -> Result<f64, String> {
    move |_| Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: Vec<f64>) -> WordDistribution {
        WordDistribution::new(v).unwrap()
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let p = dist(vec![0.25, 0.5, 0.125, 0.125]);
        for (a, b) in [(0.3, 0.3), (0.1, 0.7), (0.0, 0.0), (0.55, 0.11)] {
            let w = FusionWeights::new(a, b).unwrap();
            let out = fuse(&p, &p, &p, &w).unwrap();
            assert_eq!(out.probs(), p.probs(), "weights ({a}, {b})");
        }
    }

    #[test]
    fn hand_computed_two_word_case() {
        let spa = dist(vec![1.0, 0.0]);
        let sem = dist(vec![0.0, 1.0]);
        let imp = dist(vec![0.0, 1.0]);
        let w = FusionWeights::new(0.3, 0.3).unwrap();
        let out = fuse(&spa, &sem, &imp, &w).unwrap();
        assert!((out.probs()[0] - 0.3).abs() < 1e-15);
        assert!((out.probs()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn default_weights_leave_forty_percent_implicit() {
        let w = FusionWeights::default();
        assert!((w.implicit_weight() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn weight_invariants_enforced() {
        assert!(FusionWeights::new(-0.1, 0.3).is_err());
        assert!(FusionWeights::new(0.5, 0.5).is_err());
        assert!(FusionWeights::new(0.3, f64::NAN).is_err());
        assert!(FusionWeights::new(0.0, 0.0).is_ok());
        assert!(FusionWeights::new(0.6, 0.39).is_ok());
    }

    #[test]
    fn distribution_invariants_enforced() {
        assert!(WordDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(WordDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(WordDistribution::new(vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn size_mismatch_rejected() {
        let a = dist(vec![0.5, 0.5]);
        let b = dist(vec![1.0]);
        let w = FusionWeights::default();
        assert!(matches!(fuse(&a, &a, &b, &w), Err(FusionError::SizeMismatch(..))));
    }

    #[test]
    fn fused_output_stays_normalized() {
        let spa = dist(vec![0.7, 0.2, 0.1]);
        let sem = dist(vec![0.1, 0.8, 0.1]);
        let imp = dist(vec![0.3, 0.3, 0.4]);
        let w = FusionWeights::new(0.25, 0.35).unwrap();
        let out = fuse(&spa, &sem, &imp, &w).unwrap();
        let sum: f64 = out.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(out.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn increasing_alpha_raises_spatial_heavy_words() {
        let spa = dist(vec![0.9, 0.1]);
        let sem = dist(vec![0.5, 0.5]);
        let imp = dist(vec![0.2, 0.8]);
        let beta = 0.2;
        let mut last = f64::NEG_INFINITY;
        for a in [0.1, 0.2, 0.3, 0.4, 0.5] {
            let w = FusionWeights::new(a, beta).unwrap();
            let out = fuse(&spa, &sem, &imp, &w).unwrap();
            assert!(out.probs()[0] > last);
            last = out.probs()[0];
        }
    }

    #[test]
    fn sweep_grid_structure_at_tenth_step() {
        let grid = sweep(constant_scorer(1.0), 0.1).unwrap();
        assert_eq!(grid.axis.len(), 8);
        assert_eq!(grid.cells.len(), 64);
        let valid: Vec<(usize, usize)> =
            grid.valid_cells().map(|c| (c.a_index, c.b_index)).collect();
        assert_eq!(valid.len(), 36);
        for (a, b) in &valid {
            assert!(a + b <= 9, "cell ({a}, {b}) should be invalid");
        }
        let expected: Vec<(usize, usize)> =
            (1..=8).flat_map(|a| (1..=(9 - a).min(8)).map(move |b| (a, b))).collect();
        assert_eq!(valid, expected);
    }

    #[test]
    fn sweep_constant_scorer_uniform() {
        let grid = sweep(constant_scorer(42.0), 0.1).unwrap();
        for c in grid.valid_cells() {
            assert_eq!(c.outcome, CellOutcome::Ok { score: 42.0 });
        }
    }

    #[test]
    fn sweep_argmax_matches_peak() {
        let grid = sweep(peaked_scorer(0.3, 0.3), 0.1).unwrap();
        let best = grid
            .valid_cells()
            .max_by(|x, y| {
                let (CellOutcome::Ok { score: sx }, CellOutcome::Ok { score: sy }) =
                    (&x.outcome, &y.outcome)
                else {
                    unreachable!()
                };
                sx.partial_cmp(sy).unwrap()
            })
            .unwrap();
        assert_eq!((best.a_index, best.b_index), (3, 3));
    }

    #[test]
    fn sweep_propagates_scorer_failures_per_cell() {
        let grid = sweep(
            |w: &FusionWeights| {
                if w.alpha() < 0.15 {
                    Err("no score here".to_string())
                } else {
                    Ok(1.0)
                }
            },
            0.1,
        )
        .unwrap();
        let failed = grid
            .cells
            .iter()
            .filter(|c| matches!(c.outcome, CellOutcome::Error { .. }))
            .count();
        assert_eq!(failed, 8, "alpha = 0.1 row fails");
        assert_eq!(grid.valid_cells().count(), 36 - 8);
    }

    #[test]
    fn sweep_rejects_bad_step() {
        assert!(sweep(constant_scorer(0.0), 0.0).is_err());
        assert!(sweep(constant_scorer(0.0), 1.0).is_err());
        assert!(sweep(constant_scorer(0.0), f64::NAN).is_err());
    }

    #[test]
    fn table_render_shape() {
        let grid = sweep(peaked_scorer(0.3, 0.3), 0.1).unwrap();
        let table = render_table(&grid);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 9); // header + 8 rows
        assert!(lines[0].contains("0.8"));
        assert!(lines[8].contains('-'), "bottom row has dashed cells");
        assert!(table.contains("107.02"));
    }
}
