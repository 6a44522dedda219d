//! Typed-directional graph attention for spatial and semantic graphs.
//!
//! Each node aggregates over its incoming edges. An edge stored as `j -> i`
//! selects the forward matrices while aggregating into `i`; the self-loop
//! selects the self matrices. Edge labels select a bias vector `b_lab` in
//! the message and a scalar offset `c_lab` in the score:
//! `score = (W_K v_i)^T (Wv_dir v_j) + c_lab`,
//! `message = W_dir v_j + b_lab`, with a plain softmax over the node's
//! incoming edges (shifted-exponential form).

use crate::encoder::{feature_set_unchecked, AttentionMap, EncoderError, RegionFeatureSet};
use crate::graph::{label_index, EdgeLabel, GraphVariant, RelationGraph};
use crate::numerics::{dot, Matrix};

/// Edge orientation relative to the aggregating node. Backward matrices are
/// part of the parameter family but no stored edge selects them: attention
/// runs over in-edges, and the mirror edge of a spatial pair carries the
/// reverse direction explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward = 0,
    Backward = 1,
    SelfLoop = 2,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Forward, Direction::Backward, Direction::SelfLoop];

    pub fn key(&self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::SelfLoop => "self",
        }
    }
}

/// Learnable tensors of one typed GAT: per-direction transform families,
/// the shared key transform, and per-label bias vectors and score offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedGatParams {
    pub variant: GraphVariant,
    /// Message transforms, indexed by [`Direction`].
    pub w_dir: [Matrix; 3],
    /// Score transforms, indexed by [`Direction`].
    pub wv_dir: [Matrix; 3],
    pub w_k: Matrix,
    /// Per-label message bias, indexed by [`label_index`].
    pub b_lab: Vec<Vec<f64>>,
    /// Per-label score offset, indexed by [`label_index`].
    pub c_lab: Vec<f64>,
}

impl TypedGatParams {
    pub fn d(&self) -> usize {
        self.w_k.rows()
    }

    fn validate(&self, d: usize) -> Result<(), EncoderError> {
        if self.variant == GraphVariant::Implicit {
            return Err(EncoderError::Config(
                "typed parameters cannot target the implicit variant".to_string(),
            ));
        }
        for m in self.w_dir.iter().chain(&self.wv_dir).chain([&self.w_k]) {
            if m.dims() != (d, d) {
                return Err(EncoderError::ShapeMismatch {
                    context: "typed params",
                    expected: format!("{d}x{d}"),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
        }
        if self.b_lab.len() != self.c_lab.len() {
            return Err(EncoderError::Config(format!(
                "label family has {} biases but {} offsets",
                self.b_lab.len(),
                self.c_lab.len()
            )));
        }
        if let Some(b) = self.b_lab.iter().find(|b| b.len() != d) {
            return Err(EncoderError::ShapeMismatch {
                context: "typed params b_lab",
                expected: format!("{d}"),
                got: format!("{}", b.len()),
            });
        }
        Ok(())
    }
}

/// Gradients for every typed parameter and the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedGradients {
    pub w_dir: [Matrix; 3],
    pub wv_dir: [Matrix; 3],
    pub w_k: Matrix,
    pub b_lab: Vec<Vec<f64>>,
    pub c_lab: Vec<f64>,
    pub features: Matrix,
}

struct TypedEdge {
    src: usize,
    dir: usize,
    label: usize,
    weight: f64,
}

struct Intermediates {
    keys: Matrix,
    vals: [Matrix; 3],
    wv_vals: [Matrix; 3],
    per_node: Vec<Vec<TypedEdge>>,
    weights: Matrix,
    sim: Matrix,
}

fn validate_inputs(
    v: &RegionFeatureSet,
    g: &RelationGraph,
    p: &TypedGatParams,
) -> Result<(), EncoderError> {
    if g.variant() == GraphVariant::Implicit {
        return Err(EncoderError::WrongVariant { expected: "spatial or semantic", got: g.variant() });
    }
    if g.variant() != p.variant {
        return Err(EncoderError::WrongVariant { expected: "graph matching parameters", got: g.variant() });
    }
    if g.n() != v.n() {
        return Err(EncoderError::ShapeMismatch {
            context: "typed forward",
            expected: format!("graph of {} nodes", v.n()),
            got: format!("{}", g.n()),
        });
    }
    p.validate(v.d())
}

fn edge_direction(src: usize, dst: usize) -> Direction {
    if src == dst {
        Direction::SelfLoop
    } else {
        Direction::Forward
    }
}

fn resolve_label(p: &TypedGatParams, label: EdgeLabel) -> Result<usize, EncoderError> {
    let idx = label_index(p.variant, label)
        .ok_or_else(|| EncoderError::MissingLabel { label: label.key() })?;
    if idx >= p.b_lab.len() {
        return Err(EncoderError::MissingLabel { label: label.key() });
    }
    Ok(idx)
}

fn intermediates(
    v: &RegionFeatureSet,
    g: &RelationGraph,
    p: &TypedGatParams,
) -> Result<Intermediates, EncoderError> {
    validate_inputs(v, g, p)?;
    let n = v.n();

    let keys = v.matrix().matmul(&p.w_k.transpose())?;
    let mut vals = Vec::with_capacity(3);
    let mut wv_vals = Vec::with_capacity(3);
    for dir in 0..3 {
        vals.push(v.matrix().matmul(&p.w_dir[dir].transpose())?);
        wv_vals.push(v.matrix().matmul(&p.wv_dir[dir].transpose())?);
    }
    let vals: [Matrix; 3] = vals.try_into().expect("three directions");
    let wv_vals: [Matrix; 3] = wv_vals.try_into().expect("three directions");

    let mut weights = Matrix::zeros(n, n);
    let mut sim = Matrix::zeros(n, n);
    let mut per_node = Vec::with_capacity(n);

    for i in 0..n {
        let incoming = g.in_neighbors(i)?;
        let mut edges = Vec::with_capacity(incoming.len());
        let mut max_score = f64::NEG_INFINITY;
        let mut scores = Vec::with_capacity(incoming.len());
        for &(j, label) in incoming {
            let dir = edge_direction(j, i) as usize;
            let lab = resolve_label(p, label)?;
            let score = dot(keys.row(i), wv_vals[dir].row(j)) + p.c_lab[lab];
            sim.set(i, j, score);
            if score > max_score {
                max_score = score;
            }
            scores.push(score);
            edges.push(TypedEdge { src: j, dir, label: lab, weight: 0.0 });
        }
        if !edges.is_empty() {
            let mut z = 0.0;
            for (e, &s) in edges.iter_mut().zip(&scores) {
                e.weight = (s - max_score).exp();
                z += e.weight;
            }
            for e in &mut edges {
                e.weight /= z;
                weights.set(i, e.src, weights.get(i, e.src) + e.weight);
            }
        }
        per_node.push(edges);
    }

    Ok(Intermediates { keys, vals, wv_vals, per_node, weights, sim })
}

/// Forward pass: relationship features `v*` and the attention map. A node
/// whose only incoming edge is the self-loop gets weight 1 on itself, so
/// `v*_i = W_self v_i + b_self`.
pub fn typed_forward(
    v: &RegionFeatureSet,
    g: &RelationGraph,
    p: &TypedGatParams,
) -> Result<(RegionFeatureSet, AttentionMap), EncoderError> {
    let inter = intermediates(v, g, p)?;
    let n = v.n();
    let d = v.d();
    let mut v_star = Matrix::zeros(n, d);
    for i in 0..n {
        for e in &inter.per_node[i] {
            let msg = inter.vals[e.dir].row(e.src);
            let bias = &p.b_lab[e.label];
            let row = v_star.row_mut(i);
            for c in 0..d {
                row[c] += e.weight * (msg[c] + bias[c]);
            }
        }
    }
    let attn =
        AttentionMap { weights: inter.weights, raw_similarity: inter.sim, geometry_gate: None };
    Ok((feature_set_unchecked(v_star), attn))
}

/// Backward pass for the loss whose gradient with respect to `v*` is
/// `upstream` (`n x d`).
pub fn typed_backward(
    v: &RegionFeatureSet,
    g: &RelationGraph,
    p: &TypedGatParams,
    upstream: &Matrix,
) -> Result<TypedGradients, EncoderError> {
    let inter = intermediates(v, g, p)?;
    let n = v.n();
    let d = v.d();
    if upstream.dims() != (n, d) {
        return Err(EncoderError::ShapeMismatch {
            context: "typed backward upstream",
            expected: format!("{n}x{d}"),
            got: format!("{}x{}", upstream.rows(), upstream.cols()),
        });
    }

    // Row caches: wk_wv[dir] row j = W_K^T (Wv_dir v_j);
    // keys_wv[dir] row i = Wv_dir^T k_i; upstream_w[dir] row i = W_dir^T u_i.
    let mut wk_wv = Vec::with_capacity(3);
    let mut keys_wv = Vec::with_capacity(3);
    let mut upstream_w = Vec::with_capacity(3);
    for dir in 0..3 {
        wk_wv.push(inter.wv_vals[dir].matmul(&p.w_k)?);
        keys_wv.push(inter.keys.matmul(&p.wv_dir[dir])?);
        upstream_w.push(upstream.matmul(&p.w_dir[dir])?);
    }

    let labels = p.b_lab.len();
    let mut grad = TypedGradients {
        w_dir: [Matrix::zeros(d, d), Matrix::zeros(d, d), Matrix::zeros(d, d)],
        wv_dir: [Matrix::zeros(d, d), Matrix::zeros(d, d), Matrix::zeros(d, d)],
        w_k: Matrix::zeros(d, d),
        b_lab: vec![vec![0.0; d]; labels],
        c_lab: vec![0.0; labels],
        features: Matrix::zeros(n, d),
    };

    for i in 0..n {
        let edges = &inter.per_node[i];
        if edges.is_empty() {
            continue;
        }
        let u_i = upstream.row(i);

        let gains: Vec<f64> = edges
            .iter()
            .map(|e| dot(u_i, inter.vals[e.dir].row(e.src)) + dot(u_i, &p.b_lab[e.label]))
            .collect();
        let g_mean: f64 = edges.iter().zip(&gains).map(|(e, g)| e.weight * g).sum();

        for (e, &g_e) in edges.iter().zip(&gains) {
            let ds = e.weight * (g_e - g_mean);
            let j = e.src;

            grad.w_dir[e.dir].add_outer(e.weight, u_i, v.row(j));
            grad.wv_dir[e.dir].add_outer(ds, inter.keys.row(i), v.row(j));
            grad.w_k.add_outer(ds, inter.wv_vals[e.dir].row(j), v.row(i));
            grad.c_lab[e.label] += ds;
            for (b, &u) in grad.b_lab[e.label].iter_mut().zip(u_i) {
                *b += e.weight * u;
            }

            for c in 0..d {
                let gi = grad.features.get(i, c) + ds * wk_wv[e.dir].get(j, c);
                grad.features.set(i, c, gi);
                let gj = grad.features.get(j, c)
                    + ds * keys_wv[e.dir].get(i, c)
                    + e.weight * upstream_w[e.dir].get(i, c);
                grad.features.set(j, c, gj);
            }
        }
    }
    Ok(grad)
}
