//! Semantic-relationship classifier: the features of two regions and their
//! union box form a 3-token sequence that runs through two transformer
//! encoder layers (post-norm, multi-head self-attention, ReLU feed-forward),
//! is mean-pooled, and projected to class probabilities.

use crate::encoder::EncoderError;
use crate::numerics::{dot, stable_softmax, Matrix};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Number of input tokens: subject region, object region, union box.
pub const TOKENS: usize = 3;

/// One transformer encoder layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerLayerParams {
    pub attn_w_q: Matrix,
    pub attn_w_k: Matrix,
    pub attn_w_v: Matrix,
    pub attn_w_o: Matrix,
    pub ff_w1: Matrix,
    pub ff_b1: Vec<f64>,
    pub ff_w2: Matrix,
    pub ff_b2: Vec<f64>,
    pub norm1_gain: Vec<f64>,
    pub norm1_offset: Vec<f64>,
    pub norm2_gain: Vec<f64>,
    pub norm2_offset: Vec<f64>,
}

/// Full classifier: input projection, learned 3-slot position embeddings,
/// two encoder layers, and the output projection to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticClassifierParams {
    pub input_proj: Matrix,
    pub pos_embed: Matrix,
    pub layers: [TransformerLayerParams; 2],
    pub output_proj: Matrix,
    pub heads: usize,
}

impl SemanticClassifierParams {
    pub fn d(&self) -> usize {
        self.input_proj.rows()
    }

    pub fn d_m(&self) -> usize {
        self.input_proj.cols()
    }

    pub fn classes(&self) -> usize {
        self.output_proj.cols()
    }

    fn validate(&self) -> Result<(), EncoderError> {
        let d_m = self.d_m();
        if self.heads == 0 || d_m % self.heads != 0 {
            return Err(EncoderError::Config(format!(
                "model width {d_m} not divisible by {} heads",
                self.heads
            )));
        }
        if self.pos_embed.dims() != (TOKENS, d_m) {
            return Err(EncoderError::ShapeMismatch {
                context: "classifier pos_embed",
                expected: format!("{TOKENS}x{d_m}"),
                got: format!("{}x{}", self.pos_embed.rows(), self.pos_embed.cols()),
            });
        }
        if self.output_proj.rows() != d_m {
            return Err(EncoderError::ShapeMismatch {
                context: "classifier output_proj",
                expected: format!("{d_m} rows"),
                got: format!("{}", self.output_proj.rows()),
            });
        }
        for layer in &self.layers {
            for m in [&layer.attn_w_q, &layer.attn_w_k, &layer.attn_w_v, &layer.attn_w_o] {
                if m.dims() != (d_m, d_m) {
                    return Err(EncoderError::ShapeMismatch {
                        context: "classifier attention projection",
                        expected: format!("{d_m}x{d_m}"),
                        got: format!("{}x{}", m.rows(), m.cols()),
                    });
                }
            }
            let ff = layer.ff_w1.cols();
            if layer.ff_w1.rows() != d_m
                || layer.ff_w2.dims() != (ff, d_m)
                || layer.ff_b1.len() != ff
                || layer.ff_b2.len() != d_m
            {
                return Err(EncoderError::Config("feed-forward shapes inconsistent".to_string()));
            }
            for v in [&layer.norm1_gain, &layer.norm1_offset, &layer.norm2_gain, &layer.norm2_offset]
            {
                if v.len() != d_m {
                    return Err(EncoderError::Config("normalization vector length".to_string()));
                }
            }
        }
        Ok(())
    }
}

fn layer_norm(x: &[f64], gain: &[f64], offset: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    x.iter()
        .zip(gain.iter().zip(offset))
        .map(|(&v, (&g, &o))| (v - mean) * inv * g + o)
        .collect()
}

fn encoder_layer(
    x: &Matrix,
    layer: &TransformerLayerParams,
    heads: usize,
) -> Result<Matrix, EncoderError> {
    let d_m = x.cols();
    let head_dim = d_m / heads;
    let scale = 1.0 / (head_dim as f64).sqrt();

    let q = x.matmul(&layer.attn_w_q)?;
    let k = x.matmul(&layer.attn_w_k)?;
    let v = x.matmul(&layer.attn_w_v)?;

    let mut mixed = Matrix::zeros(TOKENS, d_m);
    for h in 0..heads {
        let lo = h * head_dim;
        let hi = lo + head_dim;
        for t in 0..TOKENS {
            let logits: Vec<f64> =
                (0..TOKENS).map(|s| scale * dot(&q.row(t)[lo..hi], &k.row(s)[lo..hi])).collect();
            let weights = stable_softmax(&logits, None)?;
            for (s, &w) in weights.iter().enumerate() {
                let src = &v.row(s)[lo..hi];
                let out = &mut mixed.row_mut(t)[lo..hi];
                for (o, &sv) in out.iter_mut().zip(src) {
                    *o += w * sv;
                }
            }
        }
    }
    let attn_out = mixed.matmul(&layer.attn_w_o)?;

    let mut out = Matrix::zeros(TOKENS, d_m);
    for t in 0..TOKENS {
        let summed: Vec<f64> =
            x.row(t).iter().zip(attn_out.row(t)).map(|(&a, &b)| a + b).collect();
        let normed = layer_norm(&summed, &layer.norm1_gain, &layer.norm1_offset);

        let mut hidden = layer.ff_w1.tr_matvec(&normed);
        for (h, &b) in hidden.iter_mut().zip(&layer.ff_b1) {
            *h = (*h + b).max(0.0);
        }
        let mut ff = layer.ff_w2.tr_matvec(&hidden);
        for (f, &b) in ff.iter_mut().zip(&layer.ff_b2) {
            *f += b;
        }

        let residual: Vec<f64> = normed.iter().zip(&ff).map(|(&a, &b)| a + b).collect();
        let final_row = layer_norm(&residual, &layer.norm2_gain, &layer.norm2_offset);
        out.row_mut(t).copy_from_slice(&final_row);
    }
    Ok(out)
}

/// Class probabilities for the ordered region pair `(i, j)` given the three
/// region-level feature vectors.
pub fn semantic_classifier_forward(
    v_i: &[f64],
    v_j: &[f64],
    v_union: &[f64],
    p: &SemanticClassifierParams,
) -> Result<Vec<f64>, EncoderError> {
    p.validate()?;
    let d = p.d();
    for (name, v) in [("v_i", v_i), ("v_j", v_j), ("v_union", v_union)] {
        if v.len() != d {
            return Err(EncoderError::ShapeMismatch {
                context: "classifier input",
                expected: format!("{name} of length {d}"),
                got: format!("{}", v.len()),
            });
        }
    }

    let d_m = p.d_m();
    let mut tokens = Matrix::zeros(TOKENS, d_m);
    for (t, v) in [v_i, v_j, v_union].into_iter().enumerate() {
        let projected = p.input_proj.tr_matvec(v);
        for (c, (pv, pe)) in projected.iter().zip(p.pos_embed.row(t)).enumerate() {
            tokens.set(t, c, pv + pe);
        }
    }

    let mut x = tokens;
    for layer in &p.layers {
        x = encoder_layer(&x, layer, p.heads)?;
    }

    let mut pooled = vec![0.0; d_m];
    for t in 0..TOKENS {
        for (acc, &v) in pooled.iter_mut().zip(x.row(t)) {
            *acc += v;
        }
    }
    for acc in &mut pooled {
        *acc /= TOKENS as f64;
    }

    let logits = p.output_proj.tr_matvec(&pooled);
    Ok(stable_softmax(&logits, None)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo(seed: usize) -> impl FnMut(usize, usize) -> f64 {
        move |r, c| {
            let k = (r * 31 + c * 17 + seed * 101) % 23;
            (k as f64 - 11.0) * 0.03
        }
    }

    fn test_params(d: usize, d_m: usize, heads: usize, classes: usize) -> SemanticClassifierParams {
        let layer = |seed: usize| TransformerLayerParams {
            attn_w_q: Matrix::from_fn(d_m, d_m, pseudo(seed)),
            attn_w_k: Matrix::from_fn(d_m, d_m, pseudo(seed + 1)),
            attn_w_v: Matrix::from_fn(d_m, d_m, pseudo(seed + 2)),
            attn_w_o: Matrix::from_fn(d_m, d_m, pseudo(seed + 3)),
            ff_w1: Matrix::from_fn(d_m, 4 * d_m, pseudo(seed + 4)),
            ff_b1: vec![0.01; 4 * d_m],
            ff_w2: Matrix::from_fn(4 * d_m, d_m, pseudo(seed + 5)),
            ff_b2: vec![-0.02; d_m],
            norm1_gain: vec![1.0; d_m],
            norm1_offset: vec![0.0; d_m],
            norm2_gain: vec![1.0; d_m],
            norm2_offset: vec![0.0; d_m],
        };
        SemanticClassifierParams {
            input_proj: Matrix::from_fn(d, d_m, pseudo(7)),
            pos_embed: Matrix::from_fn(TOKENS, d_m, pseudo(8)),
            layers: [layer(20), layer(40)],
            output_proj: Matrix::from_fn(d_m, classes, pseudo(9)),
            heads,
        }
    }

    fn test_inputs(d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let gen = |off: usize| (0..d).map(|i| ((i + off) % 7) as f64 * 0.1 - 0.3).collect();
        (gen(0), gen(3), gen(5))
    }

    #[test]
    fn output_is_a_distribution() {
        let p = test_params(8, 8, 2, 16);
        let (a, b, u) = test_inputs(8);
        let probs = semantic_classifier_forward(&a, &b, &u, &p).unwrap();
        assert_eq!(probs.len(), 16);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
        assert!(probs.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn forward_is_deterministic() {
        let p = test_params(8, 8, 2, 16);
        let (a, b, u) = test_inputs(8);
        let p1 = semantic_classifier_forward(&a, &b, &u, &p).unwrap();
        let p2 = semantic_classifier_forward(&a, &b, &u, &p).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn permuting_output_columns_permutes_probabilities() {
        let classes = 16;
        let p = test_params(8, 8, 2, classes);
        let (a, b, u) = test_inputs(8);
        let base = semantic_classifier_forward(&a, &b, &u, &p).unwrap();

        // rotate classes by 5
        let perm: Vec<usize> = (0..classes).map(|k| (k + 5) % classes).collect();
        let mut rotated = p.clone();
        rotated.output_proj =
            Matrix::from_fn(p.output_proj.rows(), classes, |r, c| p.output_proj.get(r, perm[c]));
        let out = semantic_classifier_forward(&a, &b, &u, &rotated).unwrap();
        for k in 0..classes {
            assert!(
                (out[k] - base[perm[k]]).abs() < 1e-14,
                "class {k}: {} vs {}",
                out[k],
                base[perm[k]]
            );
        }
    }

    #[test]
    fn head_divisibility_is_checked() {
        let p = test_params(8, 8, 3, 16);
        let (a, b, u) = test_inputs(8);
        assert!(matches!(
            semantic_classifier_forward(&a, &b, &u, &p),
            Err(EncoderError::Config(_))
        ));
    }

    #[test]
    fn input_length_is_checked() {
        let p = test_params(8, 8, 2, 16);
        let (a, b, _) = test_inputs(8);
        let short = vec![0.0; 4];
        assert!(matches!(
            semantic_classifier_forward(&a, &b, &short, &p),
            Err(EncoderError::ShapeMismatch { .. })
        ));
    }
}
