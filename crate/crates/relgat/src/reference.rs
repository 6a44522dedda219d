//! Deliberately naive reference implementations of both attention forward
//! passes: explicit per-pair loops, scalar accumulation, unshifted
//! exponentials, and a private re-derivation of the geometry gate. Nothing
//! here calls the production encoder path; tests compare the two routes.

use crate::encoder::{ImplicitGatParams, TypedGatParams};
use crate::geometry::DetectedObject;
use crate::graph::{label_index, RelationGraph};
use crate::numerics::Matrix;

fn naive_mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for r in 0..m.rows() {
        let mut acc = 0.0;
        for c in 0..m.cols() {
            acc += m.get(r, c) * v[c];
        }
        out[r] = acc;
    }
    out
}

fn naive_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn naive_gate(o_i: &DetectedObject, o_j: &DetectedObject, w_bg: &Matrix) -> f64 {
    let eps = 1e-3;
    let g = [
        ((o_i.cx - o_j.cx).abs().max(eps) / o_i.w).ln(),
        ((o_i.cy - o_j.cy).abs().max(eps) / o_i.h).ln(),
        (o_j.w / o_i.w).ln(),
        (o_j.h / o_i.h).ln(),
    ];
    let d_g = w_bg.cols();
    let pairs = d_g / 8;
    let mut pre = 0.0;
    let mut idx = 0;
    for component in g {
        for k in 0..pairs {
            let wavelength = 1000.0_f64.powf(8.0 * k as f64 / d_g as f64);
            pre += w_bg.get(0, idx) * (component / wavelength).sin();
            pre += w_bg.get(0, idx + 1) * (component / wavelength).cos();
            idx += 2;
        }
    }
    pre.max(0.0)
}

/// Naive implicit forward: returns `(v_star, weights, sim, gate)`.
pub fn ref_implicit_forward(
    features: &Matrix,
    objects: &[DetectedObject],
    graph: &RelationGraph,
    p: &ImplicitGatParams,
) -> (Matrix, Matrix, Matrix, Matrix) {
    let n = features.rows();
    let d = features.cols();
    let mut sim = Matrix::zeros(n, n);
    let mut gate = Matrix::zeros(n, n);
    let mut weights = Matrix::zeros(n, n);
    let mut v_star = Matrix::zeros(n, d);

    for i in 0..n {
        let k_i = naive_mat_vec(&p.w_k, features.row(i));
        let neighbors = graph.in_neighbors(i).expect("node in range");

        let mut z = 0.0;
        for &(j, _) in neighbors {
            let q_j = naive_mat_vec(&p.w_q, features.row(j));
            let s = naive_dot(&k_i, &q_j);
            let b = naive_gate(&objects[i], &objects[j], &p.w_bg);
            sim.set(i, j, s);
            gate.set(i, j, b);
            let t = b * s.exp();
            weights.set(i, j, t);
            z += t;
        }
        if z == 0.0 {
            for &(j, _) in neighbors {
                weights.set(i, j, 0.0);
            }
            continue;
        }
        for &(j, _) in neighbors {
            weights.set(i, j, weights.get(i, j) / z);
        }
        for &(j, _) in neighbors {
            let w_ij = weights.get(i, j);
            let h_j = naive_mat_vec(&p.w, features.row(j));
            for c in 0..d {
                v_star.set(i, c, v_star.get(i, c) + w_ij * h_j[c]);
            }
        }
    }
    (v_star, weights, sim, gate)
}

/// Naive typed forward: returns `(v_star, weights, sim)`.
pub fn ref_typed_forward(
    features: &Matrix,
    graph: &RelationGraph,
    p: &TypedGatParams,
) -> (Matrix, Matrix, Matrix) {
    let n = features.rows();
    let d = features.cols();
    let mut sim = Matrix::zeros(n, n);
    let mut weights = Matrix::zeros(n, n);
    let mut v_star = Matrix::zeros(n, d);

    for i in 0..n {
        let k_i = naive_mat_vec(&p.w_k, features.row(i));
        let neighbors = graph.in_neighbors(i).expect("node in range");

        let mut z = 0.0;
        for &(j, label) in neighbors {
            let dir = if j == i { 2 } else { 0 }; // self or forward
            let lab = label_index(p.variant, label).expect("label in family");
            let wv_vj = naive_mat_vec(&p.wv_dir[dir], features.row(j));
            let s = naive_dot(&k_i, &wv_vj) + p.c_lab[lab];
            sim.set(i, j, s);
            weights.set(i, j, s.exp());
            z += s.exp();
        }
        if neighbors.is_empty() {
            continue;
        }
        for &(j, _) in neighbors {
            weights.set(i, j, weights.get(i, j) / z);
        }
        for &(j, label) in neighbors {
            let dir = if j == i { 2 } else { 0 };
            let lab = label_index(p.variant, label).expect("label in family");
            let w_ij = weights.get(i, j);
            let m_j = naive_mat_vec(&p.w_dir[dir], features.row(j));
            for c in 0..d {
                v_star.set(i, c, v_star.get(i, c) + w_ij * (m_j[c] + p.b_lab[lab][c]));
            }
        }
    }
    (v_star, weights, sim)
}
