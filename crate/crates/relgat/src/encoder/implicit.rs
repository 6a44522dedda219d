//! Implicit graph attention: similarity scores gated by embedded box
//! geometry, normalized per node over its graph neighbors.
//!
//! Per ordered pair (i, j): `sim_ij = (W_K v_i)^T (W_Q v_j)` and
//! `gate_ij = max(0, W_bG . embed(geometry(o_i, o_j)))`. Attention is
//! `gate_ij * exp(sim_ij)` normalized over i's neighbors, computed in
//! shifted-exponential form. A node whose gates are all trimmed to zero
//! gets an all-zero attention row and a zero relationship feature.

use crate::encoder::{feature_set_unchecked, AttentionMap, EncoderError, RegionFeatureSet};
use crate::geometry::{geometry_feature, sinusoidal_embed, DetectedObject};
use crate::graph::{GraphVariant, RelationGraph};
use crate::numerics::{dot, Matrix};

/// Learnable tensors of the implicit variant: value transform `w`,
/// key/query transforms `w_k`/`w_q`, and the geometry-embedding projection
/// `w_bg` (`1 x d_g`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitGatParams {
    pub w: Matrix,
    pub w_k: Matrix,
    pub w_q: Matrix,
    pub w_bg: Matrix,
}

impl ImplicitGatParams {
    pub fn d(&self) -> usize {
        self.w.rows()
    }

    pub fn d_g(&self) -> usize {
        self.w_bg.cols()
    }

    fn validate(&self, d: usize) -> Result<(), EncoderError> {
        for (name, m) in [("w", &self.w), ("w_k", &self.w_k), ("w_q", &self.w_q)] {
            if m.dims() != (d, d) {
                return Err(EncoderError::ShapeMismatch {
                    context: "implicit params",
                    expected: format!("{name} as {d}x{d}"),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
        }
        if self.w_bg.rows() != 1 {
            return Err(EncoderError::ShapeMismatch {
                context: "implicit params",
                expected: "w_bg as 1 x d_g".to_string(),
                got: format!("{}x{}", self.w_bg.rows(), self.w_bg.cols()),
            });
        }
        Ok(())
    }
}

/// Gradients of a scalar loss with respect to every implicit parameter and
/// the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitGradients {
    pub w: Matrix,
    pub w_k: Matrix,
    pub w_q: Matrix,
    pub w_bg: Matrix,
    pub features: Matrix,
}

struct Intermediates {
    keys: Matrix,
    queries: Matrix,
    /// Similarities masked to graph edges (zero elsewhere).
    sim: Matrix,
    /// Pre-ReLU gate values at graph edges.
    pre_gate: Matrix,
    /// Post-ReLU gate values at graph edges.
    gate: Matrix,
    weights: Matrix,
    /// Per-row max similarity over the support; -inf when support is empty.
    row_max: Vec<f64>,
    /// Per-row shifted normalizer; 0 when support is empty.
    row_sum: Vec<f64>,
}

fn validate_inputs(
    v: &RegionFeatureSet,
    objects: &[DetectedObject],
    g: &RelationGraph,
    p: &ImplicitGatParams,
) -> Result<(), EncoderError> {
    if g.variant() != GraphVariant::Implicit {
        return Err(EncoderError::WrongVariant { expected: "implicit", got: g.variant() });
    }
    if objects.len() != v.n() || g.n() != v.n() {
        return Err(EncoderError::ShapeMismatch {
            context: "implicit forward",
            expected: format!("{} regions", v.n()),
            got: format!("{} objects, graph of {}", objects.len(), g.n()),
        });
    }
    p.validate(v.d())
}

fn intermediates(
    v: &RegionFeatureSet,
    objects: &[DetectedObject],
    g: &RelationGraph,
    p: &ImplicitGatParams,
) -> Result<Intermediates, EncoderError> {
    validate_inputs(v, objects, g, p)?;
    let n = v.n();
    let d_g = p.d_g();

    let keys = v.matrix().matmul(&p.w_k.transpose())?;
    let queries = v.matrix().matmul(&p.w_q.transpose())?;
    let sim_full = keys.matmul(&queries.transpose())?;

    let mut sim = Matrix::zeros(n, n);
    let mut pre_gate = Matrix::zeros(n, n);
    let mut gate = Matrix::zeros(n, n);
    let mut weights = Matrix::zeros(n, n);
    let mut row_max = vec![f64::NEG_INFINITY; n];
    let mut row_sum = vec![0.0; n];

    for i in 0..n {
        let neighbors = g.in_neighbors(i)?;
        for &(j, _) in neighbors {
            let embed = sinusoidal_embed(&geometry_feature(&objects[i], &objects[j]), d_g)?;
            let pre = dot(p.w_bg.row(0), &embed);
            pre_gate.set(i, j, pre);
            gate.set(i, j, pre.max(0.0));
            let s = sim_full.get(i, j);
            sim.set(i, j, s);
            if pre > 0.0 && s > row_max[i] {
                row_max[i] = s;
            }
        }
        if row_max[i] == f64::NEG_INFINITY {
            continue; // empty support: zero attention row
        }
        let mut z = 0.0;
        for &(j, _) in neighbors {
            if gate.get(i, j) > 0.0 {
                let t = gate.get(i, j) * (sim.get(i, j) - row_max[i]).exp();
                weights.set(i, j, t);
                z += t;
            }
        }
        for &(j, _) in neighbors {
            if gate.get(i, j) > 0.0 {
                weights.set(i, j, weights.get(i, j) / z);
            }
        }
        row_sum[i] = z;
    }

    Ok(Intermediates { keys, queries, sim, pre_gate, gate, weights, row_max, row_sum })
}

/// Forward pass: relationship features `v*` and the attention map.
pub fn implicit_forward(
    v: &RegionFeatureSet,
    objects: &[DetectedObject],
    g: &RelationGraph,
    p: &ImplicitGatParams,
) -> Result<(RegionFeatureSet, AttentionMap), EncoderError> {
    let inter = intermediates(v, objects, g, p)?;
    let values = v.matrix().matmul(&p.w.transpose())?;
    let v_star = inter.weights.matmul(&values)?;
    let attn = AttentionMap {
        weights: inter.weights,
        raw_similarity: inter.sim,
        geometry_gate: Some(inter.gate),
    };
    Ok((feature_set_unchecked(v_star), attn))
}

/// Backward pass for the loss `L` whose gradient with respect to `v*` is
/// `upstream` (`n x d`). The ReLU trim uses subgradient zero at the kink, so
/// zero-support rows contribute nothing.
pub fn implicit_backward(
    v: &RegionFeatureSet,
    objects: &[DetectedObject],
    g: &RelationGraph,
    p: &ImplicitGatParams,
    upstream: &Matrix,
) -> Result<ImplicitGradients, EncoderError> {
    let inter = intermediates(v, objects, g, p)?;
    let n = v.n();
    let d = v.d();
    let d_g = p.d_g();
    if upstream.dims() != (n, d) {
        return Err(EncoderError::ShapeMismatch {
            context: "implicit backward upstream",
            expected: format!("{n}x{d}"),
            got: format!("{}x{}", upstream.rows(), upstream.cols()),
        });
    }

    // Row j of `values` is W v_j; row i of `upstream_w` is W^T u_i;
    // row j of `queries_wk` is W_K^T q_j; row i of `keys_wq` is W_Q^T k_i.
    let values = v.matrix().matmul(&p.w.transpose())?;
    let upstream_w = upstream.matmul(&p.w)?;
    let queries_wk = inter.queries.matmul(&p.w_k)?;
    let keys_wq = inter.keys.matmul(&p.w_q)?;

    let mut grad = ImplicitGradients {
        w: Matrix::zeros(d, d),
        w_k: Matrix::zeros(d, d),
        w_q: Matrix::zeros(d, d),
        w_bg: Matrix::zeros(1, d_g),
        features: Matrix::zeros(n, d),
    };

    let mut support: Vec<(usize, f64, f64)> = Vec::new(); // (j, w_ij, g_ij)
    for i in 0..n {
        if inter.row_sum[i] == 0.0 {
            continue;
        }
        let u_i = upstream.row(i);
        let neighbors = g.in_neighbors(i)?;

        support.clear();
        let mut g_mean = 0.0;
        for &(j, _) in neighbors {
            if inter.gate.get(i, j) > 0.0 {
                let w_ij = inter.weights.get(i, j);
                let g_ij = dot(u_i, values.row(j));
                g_mean += w_ij * g_ij;
                support.push((j, w_ij, g_ij));
            }
        }

        for &(j, w_ij, g_ij) in &support {
            let ds = w_ij * (g_ij - g_mean);
            let dgate =
                (g_ij - g_mean) * (inter.sim.get(i, j) - inter.row_max[i]).exp() / inter.row_sum[i];

            grad.w.add_outer(w_ij, u_i, v.row(j));
            grad.w_k.add_outer(ds, inter.queries.row(j), v.row(i));
            grad.w_q.add_outer(ds, inter.keys.row(i), v.row(j));

            if inter.pre_gate.get(i, j) > 0.0 {
                let embed = sinusoidal_embed(&geometry_feature(&objects[i], &objects[j]), d_g)?;
                for (c, e) in embed.iter().enumerate() {
                    grad.w_bg.set(0, c, grad.w_bg.get(0, c) + dgate * e);
                }
            }

            for (c, (&qk, &kq)) in queries_wk.row(j).iter().zip(keys_wq.row(i)).enumerate() {
                grad.features.set(i, c, grad.features.get(i, c) + ds * qk);
                let vj_extra = ds * kq + w_ij * upstream_w.get(i, c);
                grad.features.set(j, c, grad.features.get(j, c) + vj_extra);
            }
        }
    }
    Ok(grad)
}
