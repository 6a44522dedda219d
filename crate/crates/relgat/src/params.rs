//! Parameter bundles for all encoder variants, seeded initialization, and
//! the named-tensor JSON file format.
//!
//! Every tensor has a stable dotted name (`implicit.W_K`,
//! `spatial.W_dir.forward`, `semantic.b_lab.class_07`,
//! `classifier.layer_1.ff.W_2`, ...). Files carry `format_version`, the
//! dimension config, and the tensors sorted by name; floats round-trip
//! exactly through their shortest decimal form.

use std::collections::BTreeMap;
use std::path::Path;

use crate::encoder::{
    Direction, ImplicitGatParams, SemanticClassifierParams, TransformerLayerParams, TypedGatParams,
};
use crate::graph::{label_set, GraphVariant, SEMANTIC_CLASSES};
use crate::numerics::{Matrix, NamedTensors};
use crate::rng::{rng_from_seed, uniform};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PARAM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0}, expected {PARAM_FORMAT_VERSION}")]
    BadFormatVersion(u32),
    #[error("missing tensor '{0}'")]
    MissingTensor(String),
    #[error("unexpected tensor '{0}'")]
    UnexpectedTensor(String),
    #[error("duplicate tensor '{0}'")]
    DuplicateTensor(String),
    #[error("tensor '{name}' has shape {got}, expected {expected}")]
    ShapeMismatch { name: String, expected: String, got: String },
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Dimension configuration shared by a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Region feature width.
    pub d: usize,
    /// Geometry embedding width (multiple of 8).
    pub d_g: usize,
    /// Classifier model width.
    pub d_m: usize,
    /// Classifier attention heads.
    pub heads: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims { d: 1024, d_g: 64, d_m: 256, heads: 4 }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.d == 0 {
            return Err(ParamError::BadConfig("d must be positive".to_string()));
        }
        if self.d_g == 0 || self.d_g % 8 != 0 {
            return Err(ParamError::BadConfig(format!(
                "d_g must be a positive multiple of 8, got {}",
                self.d_g
            )));
        }
        if self.heads == 0 || self.d_m == 0 || self.d_m % self.heads != 0 {
            return Err(ParamError::BadConfig(format!(
                "d_m ({}) must be a positive multiple of heads ({})",
                self.d_m, self.heads
            )));
        }
        Ok(())
    }
}

/// All learnable tensors of the three encoders plus the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub implicit: ImplicitGatParams,
    pub spatial: TypedGatParams,
    pub semantic: TypedGatParams,
    pub classifier: SemanticClassifierParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InitKind {
    Glorot,
    Zeros,
    Ones,
}

struct TensorSpec {
    name: String,
    rows: usize,
    cols: usize,
    kind: InitKind,
}

fn spec(name: String, rows: usize, cols: usize, kind: InitKind) -> TensorSpec {
    TensorSpec { name, rows, cols, kind }
}

fn variant_prefix(variant: GraphVariant) -> &'static str {
    match variant {
        GraphVariant::Implicit => "implicit",
        GraphVariant::Spatial => "spatial",
        GraphVariant::Semantic => "semantic",
    }
}

fn tensor_specs(dims: &ModelDims) -> Vec<TensorSpec> {
    let (d, d_g, d_m) = (dims.d, dims.d_g, dims.d_m);
    let ff = 4 * d_m;
    let mut specs = vec![
        spec("implicit.W".into(), d, d, InitKind::Glorot),
        spec("implicit.W_K".into(), d, d, InitKind::Glorot),
        spec("implicit.W_Q".into(), d, d, InitKind::Glorot),
        spec("implicit.W_bG".into(), 1, d_g, InitKind::Glorot),
    ];
    for variant in [GraphVariant::Spatial, GraphVariant::Semantic] {
        let p = variant_prefix(variant);
        specs.push(spec(format!("{p}.W_K"), d, d, InitKind::Glorot));
        for dir in Direction::ALL {
            specs.push(spec(format!("{p}.W_dir.{}", dir.key()), d, d, InitKind::Glorot));
            specs.push(spec(format!("{p}.Wv_dir.{}", dir.key()), d, d, InitKind::Glorot));
        }
        for label in label_set(variant) {
            specs.push(spec(format!("{p}.b_lab.{}", label.key()), 1, d, InitKind::Zeros));
            specs.push(spec(format!("{p}.c_lab.{}", label.key()), 1, 1, InitKind::Zeros));
        }
    }
    specs.push(spec("classifier.input_proj".into(), d, d_m, InitKind::Glorot));
    specs.push(spec("classifier.pos_embed".into(), 3, d_m, InitKind::Glorot));
    for l in 0..2 {
        for w in ["W_q", "W_k", "W_v", "W_o"] {
            specs.push(spec(format!("classifier.layer_{l}.attn.{w}"), d_m, d_m, InitKind::Glorot));
        }
        specs.push(spec(format!("classifier.layer_{l}.ff.W_1"), d_m, ff, InitKind::Glorot));
        specs.push(spec(format!("classifier.layer_{l}.ff.b_1"), 1, ff, InitKind::Zeros));
        specs.push(spec(format!("classifier.layer_{l}.ff.W_2"), ff, d_m, InitKind::Glorot));
        specs.push(spec(format!("classifier.layer_{l}.ff.b_2"), 1, d_m, InitKind::Zeros));
        for norm in ["norm_1", "norm_2"] {
            specs.push(spec(format!("classifier.layer_{l}.{norm}.gain"), 1, d_m, InitKind::Ones));
            specs.push(spec(format!("classifier.layer_{l}.{norm}.offset"), 1, d_m, InitKind::Zeros));
        }
    }
    specs.push(spec("classifier.output_proj".into(), d_m, SEMANTIC_CLASSES, InitKind::Glorot));
    specs
}

fn init_tensor(rng: &mut ChaCha20Rng, s: &TensorSpec) -> Matrix {
    match s.kind {
        InitKind::Zeros => Matrix::zeros(s.rows, s.cols),
        InitKind::Ones => Matrix::from_fn(s.rows, s.cols, |_, _| 1.0),
        InitKind::Glorot => {
            let bound = (6.0 / (s.rows + s.cols) as f64).sqrt();
            let mut m = Matrix::zeros(s.rows, s.cols);
            for v in m.data_mut() {
                *v = uniform(rng, -bound, bound);
            }
            m
        }
    }
}

/// Seeded Glorot initialization of a full parameter set. Weight matrices are
/// fan-scaled uniform, biases and score offsets zero, normalization gains
/// one. Tensors are filled in sorted-name order from a single stream, so the
/// result depends only on `(seed, dims)`.
pub fn init_model_params(seed: u64, dims: &ModelDims) -> Result<ModelParams, ParamError> {
    dims.validate()?;
    let mut specs = tensor_specs(dims);
    specs.sort_by(|a, b| a.name.cmp(&b.name));
    let mut rng = rng_from_seed(seed);
    let mut map = BTreeMap::new();
    for s in &specs {
        map.insert(s.name.clone(), init_tensor(&mut rng, s));
    }
    from_tensor_map(*dims, map)
}

struct TensorMap {
    map: BTreeMap<String, Matrix>,
}

impl TensorMap {
    fn take(&mut self, name: &str, rows: usize, cols: usize) -> Result<Matrix, ParamError> {
        let m = self.map.remove(name).ok_or_else(|| ParamError::MissingTensor(name.to_string()))?;
        if m.dims() != (rows, cols) {
            return Err(ParamError::ShapeMismatch {
                name: name.to_string(),
                expected: format!("{rows}x{cols}"),
                got: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        Ok(m)
    }

    fn take_vec(&mut self, name: &str, len: usize) -> Result<Vec<f64>, ParamError> {
        Ok(self.take(name, 1, len)?.data().to_vec())
    }

    fn take_scalar(&mut self, name: &str) -> Result<f64, ParamError> {
        Ok(self.take(name, 1, 1)?.get(0, 0))
    }
}

fn typed_from_map(
    tm: &mut TensorMap,
    variant: GraphVariant,
    d: usize,
) -> Result<TypedGatParams, ParamError> {
    let p = variant_prefix(variant);
    let w_k = tm.take(&format!("{p}.W_K"), d, d)?;
    let mut w_dir = Vec::with_capacity(3);
    let mut wv_dir = Vec::with_capacity(3);
    for dir in Direction::ALL {
        w_dir.push(tm.take(&format!("{p}.W_dir.{}", dir.key()), d, d)?);
        wv_dir.push(tm.take(&format!("{p}.Wv_dir.{}", dir.key()), d, d)?);
    }
    let mut b_lab = Vec::new();
    let mut c_lab = Vec::new();
    for label in label_set(variant) {
        b_lab.push(tm.take_vec(&format!("{p}.b_lab.{}", label.key()), d)?);
        c_lab.push(tm.take_scalar(&format!("{p}.c_lab.{}", label.key()))?);
    }
    Ok(TypedGatParams {
        variant,
        w_dir: w_dir.try_into().expect("three directions"),
        wv_dir: wv_dir.try_into().expect("three directions"),
        w_k,
        b_lab,
        c_lab,
    })
}

fn layer_from_map(tm: &mut TensorMap, l: usize, d_m: usize) -> Result<TransformerLayerParams, ParamError> {
    let ff = 4 * d_m;
    Ok(TransformerLayerParams {
        attn_w_q: tm.take(&format!("classifier.layer_{l}.attn.W_q"), d_m, d_m)?,
        attn_w_k: tm.take(&format!("classifier.layer_{l}.attn.W_k"), d_m, d_m)?,
        attn_w_v: tm.take(&format!("classifier.layer_{l}.attn.W_v"), d_m, d_m)?,
        attn_w_o: tm.take(&format!("classifier.layer_{l}.attn.W_o"), d_m, d_m)?,
        ff_w1: tm.take(&format!("classifier.layer_{l}.ff.W_1"), d_m, ff)?,
        ff_b1: tm.take_vec(&format!("classifier.layer_{l}.ff.b_1"), ff)?,
        ff_w2: tm.take(&format!("classifier.layer_{l}.ff.W_2"), ff, d_m)?,
        ff_b2: tm.take_vec(&format!("classifier.layer_{l}.ff.b_2"), d_m)?,
        norm1_gain: tm.take_vec(&format!("classifier.layer_{l}.norm_1.gain"), d_m)?,
        norm1_offset: tm.take_vec(&format!("classifier.layer_{l}.norm_1.offset"), d_m)?,
        norm2_gain: tm.take_vec(&format!("classifier.layer_{l}.norm_2.gain"), d_m)?,
        norm2_offset: tm.take_vec(&format!("classifier.layer_{l}.norm_2.offset"), d_m)?,
    })
}

fn from_tensor_map(dims: ModelDims, map: BTreeMap<String, Matrix>) -> Result<ModelParams, ParamError> {
    dims.validate()?;
    let (d, d_g, d_m) = (dims.d, dims.d_g, dims.d_m);
    let mut tm = TensorMap { map };

    let implicit = ImplicitGatParams {
        w: tm.take("implicit.W", d, d)?,
        w_k: tm.take("implicit.W_K", d, d)?,
        w_q: tm.take("implicit.W_Q", d, d)?,
        w_bg: tm.take("implicit.W_bG", 1, d_g)?,
    };
    let spatial = typed_from_map(&mut tm, GraphVariant::Spatial, d)?;
    let semantic = typed_from_map(&mut tm, GraphVariant::Semantic, d)?;
    let classifier = SemanticClassifierParams {
        input_proj: tm.take("classifier.input_proj", d, d_m)?,
        pos_embed: tm.take("classifier.pos_embed", 3, d_m)?,
        layers: [layer_from_map(&mut tm, 0, d_m)?, layer_from_map(&mut tm, 1, d_m)?],
        output_proj: tm.take("classifier.output_proj", d_m, SEMANTIC_CLASSES)?,
        heads: dims.heads,
    };
    if let Some(name) = tm.map.keys().next() {
        return Err(ParamError::UnexpectedTensor(name.clone()));
    }
    Ok(ModelParams { dims, implicit, spatial, semantic, classifier })
}

/// Named tensors of one implicit parameter set, in sorted-name order.
pub fn implicit_to_tensors(prefix: &str, p: &ImplicitGatParams) -> NamedTensors {
    vec![
        (format!("{prefix}.W"), p.w.clone()),
        (format!("{prefix}.W_K"), p.w_k.clone()),
        (format!("{prefix}.W_Q"), p.w_q.clone()),
        (format!("{prefix}.W_bG"), p.w_bg.clone()),
    ]
}

/// Named tensors of one typed parameter set, in sorted-name order.
pub fn typed_to_tensors(prefix: &str, p: &TypedGatParams) -> NamedTensors {
    let mut out = vec![(format!("{prefix}.W_K"), p.w_k.clone())];
    for dir in Direction::ALL {
        out.push((format!("{prefix}.W_dir.{}", dir.key()), p.w_dir[dir as usize].clone()));
        out.push((format!("{prefix}.Wv_dir.{}", dir.key()), p.wv_dir[dir as usize].clone()));
    }
    for (i, label) in label_set(p.variant).into_iter().enumerate() {
        out.push((
            format!("{prefix}.b_lab.{}", label.key()),
            Matrix::from_vec(1, p.b_lab[i].len(), p.b_lab[i].clone()).expect("b_lab row"),
        ));
        out.push((
            format!("{prefix}.c_lab.{}", label.key()),
            Matrix::from_vec(1, 1, vec![p.c_lab[i]]).expect("c_lab scalar"),
        ));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Rebuilds an implicit parameter set from named tensors; entries outside
/// `prefix` are ignored.
pub fn implicit_from_tensors(
    prefix: &str,
    tensors: &NamedTensors,
    d: usize,
    d_g: usize,
) -> Result<ImplicitGatParams, ParamError> {
    let map: BTreeMap<String, Matrix> = tensors
        .iter()
        .filter(|(n, _)| n.starts_with(prefix))
        .map(|(n, m)| (n.clone(), m.clone()))
        .collect();
    let mut tm = TensorMap { map };
    Ok(ImplicitGatParams {
        w: tm.take(&format!("{prefix}.W"), d, d)?,
        w_k: tm.take(&format!("{prefix}.W_K"), d, d)?,
        w_q: tm.take(&format!("{prefix}.W_Q"), d, d)?,
        w_bg: tm.take(&format!("{prefix}.W_bG"), 1, d_g)?,
    })
}

/// Rebuilds a typed parameter set from named tensors; entries outside
/// `prefix` are ignored.
pub fn typed_from_tensors(
    prefix: &str,
    variant: GraphVariant,
    tensors: &NamedTensors,
    d: usize,
) -> Result<TypedGatParams, ParamError> {
    let map: BTreeMap<String, Matrix> = tensors
        .iter()
        .filter(|(n, _)| n.starts_with(prefix))
        .map(|(n, m)| (n.clone(), m.clone()))
        .collect();
    let mut tm = TensorMap { map };
    typed_from_map(&mut tm, variant, d)
}

fn classifier_to_tensors(p: &SemanticClassifierParams) -> NamedTensors {
    let row = |v: &[f64]| Matrix::from_vec(1, v.len(), v.to_vec()).expect("row vector");
    let mut out = vec![
        ("classifier.input_proj".to_string(), p.input_proj.clone()),
        ("classifier.pos_embed".to_string(), p.pos_embed.clone()),
        ("classifier.output_proj".to_string(), p.output_proj.clone()),
    ];
    for (l, layer) in p.layers.iter().enumerate() {
        out.push((format!("classifier.layer_{l}.attn.W_q"), layer.attn_w_q.clone()));
        out.push((format!("classifier.layer_{l}.attn.W_k"), layer.attn_w_k.clone()));
        out.push((format!("classifier.layer_{l}.attn.W_v"), layer.attn_w_v.clone()));
        out.push((format!("classifier.layer_{l}.attn.W_o"), layer.attn_w_o.clone()));
        out.push((format!("classifier.layer_{l}.ff.W_1"), layer.ff_w1.clone()));
        out.push((format!("classifier.layer_{l}.ff.b_1"), row(&layer.ff_b1)));
        out.push((format!("classifier.layer_{l}.ff.W_2"), layer.ff_w2.clone()));
        out.push((format!("classifier.layer_{l}.ff.b_2"), row(&layer.ff_b2)));
        out.push((format!("classifier.layer_{l}.norm_1.gain"), row(&layer.norm1_gain)));
        out.push((format!("classifier.layer_{l}.norm_1.offset"), row(&layer.norm1_offset)));
        out.push((format!("classifier.layer_{l}.norm_2.gain"), row(&layer.norm2_gain)));
        out.push((format!("classifier.layer_{l}.norm_2.offset"), row(&layer.norm2_offset)));
    }
    out
}

impl ModelParams {
    /// Every tensor as `(name, matrix)`, sorted by name.
    pub fn to_tensors(&self) -> NamedTensors {
        let mut out = implicit_to_tensors("implicit", &self.implicit);
        out.extend(typed_to_tensors("spatial", &self.spatial));
        out.extend(typed_to_tensors("semantic", &self.semantic));
        out.extend(classifier_to_tensors(&self.classifier));
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// One serialized tensor: row-major 64-bit floats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk parameter container.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamFile {
    pub format_version: u32,
    pub config: ModelDims,
    pub tensors: Vec<TensorRecord>,
}

pub fn to_param_file(params: &ModelParams) -> ParamFile {
    let tensors = params
        .to_tensors()
        .into_iter()
        .map(|(name, m)| TensorRecord {
            name,
            shape: vec![m.rows(), m.cols()],
            data: m.data().to_vec(),
        })
        .collect();
    ParamFile { format_version: PARAM_FORMAT_VERSION, config: params.dims, tensors }
}

pub fn from_param_file(file: ParamFile) -> Result<ModelParams, ParamError> {
    if file.format_version != PARAM_FORMAT_VERSION {
        return Err(ParamError::BadFormatVersion(file.format_version));
    }
    let mut map = BTreeMap::new();
    for rec in file.tensors {
        if rec.shape.len() != 2 {
            return Err(ParamError::ShapeMismatch {
                name: rec.name,
                expected: "rank-2 shape".to_string(),
                got: format!("{:?}", rec.shape),
            });
        }
        let m = Matrix::from_vec(rec.shape[0], rec.shape[1], rec.data).map_err(|_| {
            ParamError::ShapeMismatch {
                name: rec.name.clone(),
                expected: format!("{}x{} entries", rec.shape[0], rec.shape[1]),
                got: "wrong data length".to_string(),
            }
        })?;
        if map.insert(rec.name.clone(), m).is_some() {
            return Err(ParamError::DuplicateTensor(rec.name));
        }
    }
    from_tensor_map(file.config, map)
}

/// Pretty JSON with a trailing newline; byte-stable for a given parameter
/// set.
pub fn params_to_json(params: &ModelParams) -> Result<String, ParamError> {
    let mut s = serde_json::to_string_pretty(&to_param_file(params))?;
    s.push('\n');
    Ok(s)
}

pub fn save_params(path: &Path, params: &ModelParams) -> Result<(), ParamError> {
    std::fs::write(path, params_to_json(params)?)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams, ParamError> {
    let text = std::fs::read_to_string(path)?;
    let file: ParamFile = serde_json::from_str(&text)?;
    from_param_file(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dims() -> ModelDims {
        ModelDims { d: 8, d_g: 8, d_m: 8, heads: 2 }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model_params(7, &small_dims()).unwrap();
        let b = init_model_params(7, &small_dims()).unwrap();
        assert_eq!(a.implicit.w, b.implicit.w);
        assert_eq!(a.spatial.w_k, b.spatial.w_k);
        assert_eq!(a.classifier.output_proj, b.classifier.output_proj);
        let c = init_model_params(8, &small_dims()).unwrap();
        assert_ne!(a.implicit.w, c.implicit.w);
    }

    #[test]
    fn init_respects_kinds() {
        let p = init_model_params(0, &small_dims()).unwrap();
        assert!(p.spatial.b_lab.iter().all(|b| b.iter().all(|&v| v == 0.0)));
        assert!(p.spatial.c_lab.iter().all(|&c| c == 0.0));
        assert!(p.classifier.layers[0].norm1_gain.iter().all(|&g| g == 1.0));
        assert!(p.classifier.layers[0].ff_b1.iter().all(|&b| b == 0.0));
        let bound = (6.0 / 16.0_f64).sqrt();
        assert!(p.implicit.w.data().iter().all(|v| v.abs() <= bound));
        assert!(p.implicit.w.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn init_validates_dims() {
        assert!(init_model_params(0, &ModelDims { d: 8, d_g: 12, d_m: 8, heads: 2 }).is_err());
        assert!(init_model_params(0, &ModelDims { d: 8, d_g: 8, d_m: 9, heads: 2 }).is_err());
        assert!(init_model_params(0, &ModelDims { d: 0, d_g: 8, d_m: 8, heads: 2 }).is_err());
    }

    #[test]
    fn json_round_trip_is_value_exact() {
        let p = init_model_params(3, &small_dims()).unwrap();
        let json = params_to_json(&p).unwrap();
        let file: ParamFile = serde_json::from_str(&json).unwrap();
        let q = from_param_file(file).unwrap();
        assert_eq!(p, q);
        // and byte-stable
        assert_eq!(json, params_to_json(&q).unwrap());
    }

    #[test]
    fn label_families_are_complete() {
        let p = init_model_params(0, &small_dims()).unwrap();
        assert_eq!(p.spatial.b_lab.len(), 12);
        assert_eq!(p.semantic.b_lab.len(), 16);
        assert_eq!(p.spatial.c_lab.len(), 12);
        assert_eq!(p.semantic.c_lab.len(), 16);
    }

    #[test]
    fn missing_and_unexpected_tensors_are_reported() {
        let p = init_model_params(0, &small_dims()).unwrap();
        let mut file = to_param_file(&p);
        let removed = file.tensors.remove(0);
        match from_param_file(file.clone()) {
            Err(ParamError::MissingTensor(name)) => assert_eq!(name, removed.name),
            other => panic!("expected missing tensor, got {other:?}"),
        }

        let mut file2 = to_param_file(&p);
        file2.tensors.push(TensorRecord {
            name: "stray.tensor".to_string(),
            shape: vec![1, 1],
            data: vec![0.0],
        });
        assert!(matches!(from_param_file(file2), Err(ParamError::UnexpectedTensor(_))));
    }

    #[test]
    fn bad_version_is_rejected() {
        let p = init_model_params(0, &small_dims()).unwrap();
        let mut file = to_param_file(&p);
        file.format_version = 2;
        assert!(matches!(from_param_file(file), Err(ParamError::BadFormatVersion(2))));
    }

    #[test]
    fn tensor_names_cover_the_documented_scheme() {
        let p = init_model_params(0, &small_dims()).unwrap();
        let names: Vec<String> = p.to_tensors().into_iter().map(|(n, _)| n).collect();
        for expected in [
            "implicit.W",
            "implicit.W_bG",
            "spatial.W_dir.forward",
            "spatial.Wv_dir.self",
            "spatial.b_lab.overlap",
            "spatial.c_lab.octant_3",
            "semantic.b_lab.class_07",
            "semantic.c_lab.self_loop",
            "classifier.layer_0.attn.W_q",
            "classifier.layer_1.norm_2.offset",
            "classifier.output_proj",
        ] {
            assert!(names.iter().any(|n| n == expected), "missing {expected}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted, "tensors not in sorted order");
    }
}
