//! Dense matrix primitives, numerically stable softmax, and a central
//! finite-difference gradient checker.
//!
//! Everything is 64-bit and deterministic: no threading, no SIMD dispatch,
//! plain row-major loops. All public operations are pure functions over
//! immutable inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative-error denominator floor used by [`finite_diff_check`].
pub const GRAD_DENOM_FLOOR: f64 = 1e-8;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix data length {got} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, got: usize },
    #[error("softmax input has no unmasked entries")]
    EmptySupport,
    #[error("non-finite input to {op}")]
    NonFiniteInput { op: &'static str },
    #[error("mask length {mask_len} does not match logits length {logits_len}")]
    MaskLength { mask_len: usize, logits_len: usize },
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("analytic gradient set does not match parameter set: {0}")]
    GradientSetMismatch(String),
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DataLength { rows, cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Standard matrix product. Inner loop runs in ascending `k` order, so
    /// the summation order is reproducible bit-for-bit.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(lhs_row.iter()) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, NumericsError> {
        if self.dims() != other.dims() {
            return Err(NumericsError::ShapeMismatch {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `M v` for a column vector `v` of length `cols`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec length mismatch");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `M^T v` for a vector `v` of length `rows`, without materializing the
    /// transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "tr_matvec length mismatch");
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let coeff = v[r];
            if coeff == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += coeff * m;
            }
        }
        out
    }

    /// `self += coef * u v^T` (rank-one update); `u.len() == rows`,
    /// `v.len() == cols`.
    pub fn add_outer(&mut self, coef: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "add_outer row mismatch");
        assert_eq!(v.len(), self.cols, "add_outer col mismatch");
        for (r, &uv) in u.iter().enumerate() {
            let c = coef * uv;
            if c == 0.0 {
                continue;
            }
            for (o, &vv) in self.row_mut(r).iter_mut().zip(v.iter()) {
                *o += c * vv;
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dims(), other.dims(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max-subtraction softmax over `logits`, with entries where
/// `mask[i] == false` excluded from the support and set to exactly `0.0`.
///
/// Fails with [`NumericsError::EmptySupport`] when no entry is unmasked;
/// callers that want a zero-vector convention handle that variant themselves.
pub fn stable_softmax(logits: &[f64], mask: Option<&[bool]>) -> Result<Vec<f64>, NumericsError> {
    if let Some(m) = mask {
        if m.len() != logits.len() {
            return Err(NumericsError::MaskLength {
                mask_len: m.len(),
                logits_len: logits.len(),
            });
        }
    }
    let live = |i: usize| mask.map_or(true, |m| m[i]);

    let mut max = f64::NEG_INFINITY;
    let mut support = 0usize;
    for (i, &x) in logits.iter().enumerate() {
        if live(i) {
            if !x.is_finite() {
                return Err(NumericsError::NonFiniteInput { op: "stable_softmax" });
            }
            support += 1;
            if x > max {
                max = x;
            }
        }
    }
    if support == 0 {
        return Err(NumericsError::EmptySupport);
    }

    let mut out = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for (i, &x) in logits.iter().enumerate() {
        if live(i) {
            let e = (x - max).exp();
            out[i] = e;
            sum += e;
        }
    }
    for (i, o) in out.iter_mut().enumerate() {
        if live(i) {
            *o /= sum;
        }
    }
    Ok(out)
}

/// Per-parameter result of a finite-difference gradient comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradReport {
    pub parameter_name: String,
    pub max_relative_error: f64,
    /// (row, col) of the entry with the largest relative error.
    pub worst_index: (usize, usize),
    /// `false` when the objective evaluated non-finite at some perturbation;
    /// `max_relative_error` is meaningless in that case.
    pub valid: bool,
}

/// Ordered, named tensor set. Order is part of the contract: reports come
/// back in the same order.
pub type NamedTensors = Vec<(String, Matrix)>;

/// Compares `analytic` gradients of the scalar function `f` against central
/// finite differences at `params`.
///
/// The per-entry relative error is
/// `|analytic - central| / max(|analytic| + |central|, 1e-8)`, i.e. the
/// symmetric relative error with a floored denominator. A doubled gradient
/// therefore reports ~1/3, and near-zero gradients do not blow up.
pub fn finite_diff_check<F>(
    f: F,
    params: &NamedTensors,
    analytic_grads: &NamedTensors,
    step: f64,
) -> Result<Vec<GradReport>, NumericsError>
where
    F: Fn(&NamedTensors) -> f64,
{
    if !(step > 0.0) {
        return Err(NumericsError::NonPositiveStep(step));
    }
    if params.len() != analytic_grads.len() {
        return Err(NumericsError::GradientSetMismatch(format!(
            "{} parameters vs {} gradients",
            params.len(),
            analytic_grads.len()
        )));
    }
    for ((pn, pm), (gn, gm)) in params.iter().zip(analytic_grads) {
        if pn != gn {
            return Err(NumericsError::GradientSetMismatch(format!(
                "parameter '{pn}' paired with gradient '{gn}'"
            )));
        }
        if pm.dims() != gm.dims() {
            return Err(NumericsError::GradientSetMismatch(format!(
                "parameter '{pn}' is {:?} but gradient is {:?}",
                pm.dims(),
                gm.dims()
            )));
        }
    }

    let mut work = params.to_vec();
    let mut reports = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let name = params[pi].0.clone();
        let (rows, cols) = params[pi].1.dims();
        let mut max_rel = 0.0;
        let mut worst = (0, 0);
        let mut valid = true;

        'entries: for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                let orig = work[pi].1.data[idx];

                work[pi].1.data[idx] = orig + step;
                let f_plus = f(&work);
                work[pi].1.data[idx] = orig - step;
                let f_minus = f(&work);
                work[pi].1.data[idx] = orig;

                if !f_plus.is_finite() || !f_minus.is_finite() {
                    valid = false;
                    break 'entries;
                }

                let central = (f_plus - f_minus) / (2.0 * step);
                let a = analytic_grads[pi].1.data[idx];
                let rel = (a - central).abs() / (a.abs() + central.abs()).max(GRAD_DENOM_FLOOR);
                if rel > max_rel {
                    max_rel = rel;
                    worst = (r, c);
                }
            }
        }

        reports.push(GradReport {
            parameter_name: name,
            max_relative_error: if valid { max_rel } else { f64::NAN },
            worst_index: worst,
            valid,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &str, m: Matrix) -> NamedTensors {
        vec![(name.to_string(), m)]
    }

    #[test]
    fn matmul_identity_passthrough() {
        let id = Matrix::identity(2);
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let out = id.matmul(&m).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn matmul_hand_computed() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let out = a.matmul(&b).unwrap();
        assert_eq!(out.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(3, 4);
        let b = Matrix::zeros(5, 2);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("3x4"), "missing left shape: {msg}");
        assert!(msg.contains("5x2"), "missing right shape: {msg}");
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let p = stable_softmax(&[0.0, 0.0, 0.0], None).unwrap();
        for &v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_large_logits_no_overflow() {
        let p = stable_softmax(&[1000.0, 1000.0], None).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_hand_computed_quarter_three_quarters() {
        let p = stable_softmax(&[0.0, 3.0_f64.ln()], None).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15, "got {}", p[0]);
        assert!((p[1] - 0.75).abs() < 1e-15, "got {}", p[1]);
    }

    #[test]
    fn softmax_masked_entries_exactly_zero() {
        let p = stable_softmax(&[5.0, 1.0, 2.0], Some(&[true, false, true])).unwrap();
        assert_eq!(p[1], 0.0);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_empty_support_is_error() {
        assert_eq!(stable_softmax(&[], None).unwrap_err(), NumericsError::EmptySupport);
        assert_eq!(
            stable_softmax(&[1.0, 2.0], Some(&[false, false])).unwrap_err(),
            NumericsError::EmptySupport
        );
    }

    #[test]
    fn fd_check_quadratic_matches_analytic() {
        let params = named("x", Matrix::from_vec(1, 1, vec![3.0]).unwrap());
        let analytic = named("x", Matrix::from_vec(1, 1, vec![6.0]).unwrap());
        let f = |p: &NamedTensors| p[0].1.get(0, 0).powi(2);
        let reports = finite_diff_check(f, &params, &analytic, 1e-5).unwrap();
        assert!(reports[0].valid);
        assert!(
            reports[0].max_relative_error < 1e-9,
            "error {}",
            reports[0].max_relative_error
        );
    }

    #[test]
    fn fd_check_constant_function_zero_error() {
        let params = named("x", Matrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap());
        let analytic = named("x", Matrix::zeros(1, 2));
        let reports = finite_diff_check(|_| 42.0, &params, &analytic, 1e-5).unwrap();
        assert_eq!(reports[0].max_relative_error, 0.0);
    }

    #[test]
    fn fd_check_doubled_gradient_reports_one_third() {
        let params = named("x", Matrix::from_vec(1, 1, vec![3.0]).unwrap());
        let analytic = named("x", Matrix::from_vec(1, 1, vec![12.0]).unwrap());
        let f = |p: &NamedTensors| p[0].1.get(0, 0).powi(2);
        let reports = finite_diff_check(f, &params, &analytic, 1e-5).unwrap();
        assert!(
            (reports[0].max_relative_error - 1.0 / 3.0).abs() < 1e-6,
            "error {}",
            reports[0].max_relative_error
        );
    }

    #[test]
    fn fd_check_non_finite_eval_marks_invalid() {
        let params = named("x", Matrix::from_vec(1, 1, vec![0.0]).unwrap());
        let analytic = named("x", Matrix::from_vec(1, 1, vec![1.0]).unwrap());
        let f = |p: &NamedTensors| p[0].1.get(0, 0).sqrt(); // NaN at x - step
        let reports = finite_diff_check(f, &params, &analytic, 1e-5).unwrap();
        assert!(!reports[0].valid);
        assert!(reports[0].max_relative_error.is_nan());
    }

    #[test]
    fn fd_check_rejects_bad_step_and_mismatched_sets() {
        let params = named("x", Matrix::zeros(1, 1));
        let analytic = named("y", Matrix::zeros(1, 1));
        assert!(matches!(
            finite_diff_check(|_| 0.0, &params, &params.clone(), 0.0),
            Err(NumericsError::NonPositiveStep(_))
        ));
        assert!(matches!(
            finite_diff_check(|_| 0.0, &params, &analytic, 1e-5),
            Err(NumericsError::GradientSetMismatch(_))
        ));
    }
}
