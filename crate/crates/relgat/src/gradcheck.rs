//! Seeded gradient-check harness: builds a random instance per graph
//! variant, runs the analytic backward pass, and compares every parameter
//! gradient (features included) against central finite differences.
//!
//! Compiling with the `fault-injection` feature, or setting
//! `RELGAT_INJECT_FAULT=1`, doubles the analytic gradients before the
//! comparison; a healthy checker must then fail.

use crate::encoder::{
    implicit_backward, implicit_forward, typed_backward, typed_forward, EncoderError,
    ImplicitGatParams, RegionFeatureSet, TypedGatParams,
};
use crate::geometry::{geometry_feature, sinusoidal_embed, DetectedObject};
use crate::graph::{build_implicit, build_semantic, build_spatial, GraphError, GraphVariant, RelationGraph};
use crate::numerics::{dot, finite_diff_check, GradReport, Matrix, NamedTensors, NumericsError};
use crate::params::{
    implicit_from_tensors, implicit_to_tensors, init_model_params, typed_from_tensors,
    typed_to_tensors, ModelDims, ParamError,
};
use crate::rng::child_seed;
use crate::synth;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_N: usize = 5;
pub const DEFAULT_D: usize = 16;
pub const DEFAULT_D_G: usize = 16;
pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Gate margin below which the geometry projection is nudged away from the
/// ReLU kink, so finite differences never straddle it.
const KINK_MARGIN: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GradCheckError {
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GradCheckConfig {
    pub variant: GraphVariant,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub d_g: usize,
    pub step: f64,
    pub tolerance: f64,
}

impl GradCheckConfig {
    pub fn new(variant: GraphVariant, seed: u64) -> Self {
        GradCheckConfig {
            variant,
            seed,
            n: DEFAULT_N,
            d: DEFAULT_D,
            d_g: DEFAULT_D_G,
            step: DEFAULT_STEP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckOutcome {
    pub config: GradCheckConfig,
    pub fault_injected: bool,
    pub reports: Vec<GradReport>,
    pub pass: bool,
}

fn fault_scale() -> f64 {
    let injected = cfg!(feature = "fault-injection")
        || std::env::var("RELGAT_INJECT_FAULT").map(|v| v == "1").unwrap_or(false);
    if injected {
        2.0
    } else {
        1.0
    }
}

fn loss(upstream: &Matrix, v_star: &RegionFeatureSet) -> f64 {
    upstream.data().iter().zip(v_star.matrix().data()).map(|(u, v)| u * v).sum()
}

/// True when every pre-activation gate value clears the kink margin and
/// every node keeps at least one positive gate (non-degenerate support).
fn gates_usable(
    objects: &[DetectedObject],
    w_bg: &Matrix,
    d_g: usize,
) -> Result<bool, EncoderError> {
    for (i, oi) in objects.iter().enumerate() {
        let mut row_has_support = false;
        for (j, oj) in objects.iter().enumerate() {
            if i == j {
                continue;
            }
            let embed = sinusoidal_embed(&geometry_feature(oi, oj), d_g)?;
            let pre = dot(w_bg.row(0), &embed);
            if pre.abs() < KINK_MARGIN {
                return Ok(false);
            }
            if pre > 0.0 {
                row_has_support = true;
            }
        }
        if !row_has_support {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Redraws the geometry projection until no gate sits near the ReLU kink
/// and no attention row is fully trimmed, so the check point is smooth and
/// non-degenerate.
fn steer_gates(
    p: &mut ImplicitGatParams,
    objects: &[DetectedObject],
    d_g: usize,
    seed: u64,
) -> Result<(), EncoderError> {
    let bound = (6.0 / (1 + d_g) as f64).sqrt();
    let mut rng = crate::rng::rng_from_seed(seed);
    for _ in 0..1000 {
        if gates_usable(objects, &p.w_bg, d_g)? {
            return Ok(());
        }
        for v in p.w_bg.data_mut() {
            *v = crate::rng::uniform(&mut rng, -bound, bound);
        }
    }
    Err(EncoderError::Config("could not steer gates away from the ReLU kink".to_string()))
}

fn with_feature_tensor(mut tensors: NamedTensors, features: &Matrix) -> NamedTensors {
    tensors.push(("V".to_string(), features.clone()));
    tensors
}

fn feature_tensor(tensors: &NamedTensors) -> Option<&Matrix> {
    tensors.iter().find(|(n, _)| n == "V").map(|(_, m)| m)
}

fn scale_tensors(tensors: &mut NamedTensors, s: f64) {
    for (_, m) in tensors.iter_mut() {
        for v in m.data_mut() {
            *v *= s;
        }
    }
}

fn check_implicit(cfg: &GradCheckConfig) -> Result<(NamedTensors, NamedTensors, Box<dyn Fn(&NamedTensors) -> f64>), GradCheckError> {
    let n = cfg.n;
    let features = synth::features(child_seed(cfg.seed, 1), n, cfg.d);
    let objects = synth::objects(child_seed(cfg.seed, 2), n, synth::IMAGE_WIDTH, synth::IMAGE_HEIGHT);
    let graph = build_implicit(n)?;
    let dims = ModelDims { d: cfg.d, d_g: cfg.d_g, d_m: 8, heads: 2 };
    let mut p = init_model_params(child_seed(cfg.seed, 3), &dims)?.implicit;
    steer_gates(&mut p, &objects, cfg.d_g, child_seed(cfg.seed, 6))?;
    let upstream = synth::upstream(child_seed(cfg.seed, 4), n, cfg.d);

    let params = with_feature_tensor(implicit_to_tensors("implicit", &p), features.matrix());

    let grads = implicit_backward(&features, &objects, &graph, &p, &upstream)?;
    let analytic = with_feature_tensor(
        vec![
            ("implicit.W".to_string(), grads.w),
            ("implicit.W_K".to_string(), grads.w_k),
            ("implicit.W_Q".to_string(), grads.w_q),
            ("implicit.W_bG".to_string(), grads.w_bg),
        ],
        &grads.features,
    );

    let (d, d_g) = (cfg.d, cfg.d_g);
    let objective = move |tensors: &NamedTensors| -> f64 {
        let Ok(p) = implicit_from_tensors("implicit", tensors, d, d_g) else {
            return f64::NAN;
        };
        let Some(v) = feature_tensor(tensors) else { return f64::NAN };
        let Ok(v) = RegionFeatureSet::new(v.clone()) else { return f64::NAN };
        match implicit_forward(&v, &objects, &graph, &p) {
            Ok((v_star, _)) => loss(&upstream, &v_star),
            Err(_) => f64::NAN,
        }
    };
    Ok((params, analytic, Box::new(objective)))
}

fn typed_graph(cfg: &GradCheckConfig, objects: &[DetectedObject]) -> Result<RelationGraph, GraphError> {
    match cfg.variant {
        GraphVariant::Spatial => build_spatial(objects, synth::image_diag()),
        GraphVariant::Semantic => {
            build_semantic(cfg.n, &synth::semantic_predictions(child_seed(cfg.seed, 5), cfg.n), 0.5)
        }
        GraphVariant::Implicit => unreachable!("typed_graph is not called for the implicit variant"),
    }
}

fn check_typed(cfg: &GradCheckConfig) -> Result<(NamedTensors, NamedTensors, Box<dyn Fn(&NamedTensors) -> f64>), GradCheckError> {
    let n = cfg.n;
    let variant = cfg.variant;
    let prefix = match variant {
        GraphVariant::Spatial => "spatial",
        GraphVariant::Semantic => "semantic",
        GraphVariant::Implicit => unreachable!(),
    };
    let features = synth::features(child_seed(cfg.seed, 1), n, cfg.d);
    let objects = synth::objects(child_seed(cfg.seed, 2), n, synth::IMAGE_WIDTH, synth::IMAGE_HEIGHT);
    let graph = typed_graph(cfg, &objects)?;
    let dims = ModelDims { d: cfg.d, d_g: cfg.d_g, d_m: 8, heads: 2 };
    let model = init_model_params(child_seed(cfg.seed, 3), &dims)?;
    let p = match variant {
        GraphVariant::Spatial => model.spatial,
        _ => model.semantic,
    };
    let upstream = synth::upstream(child_seed(cfg.seed, 4), n, cfg.d);

    let params = with_feature_tensor(typed_to_tensors(prefix, &p), features.matrix());

    let grads = typed_backward(&features, &graph, &p, &upstream)?;
    let grads_as_params = TypedGatParams {
        variant,
        w_dir: grads.w_dir,
        wv_dir: grads.wv_dir,
        w_k: grads.w_k,
        b_lab: grads.b_lab,
        c_lab: grads.c_lab,
    };
    let analytic = with_feature_tensor(typed_to_tensors(prefix, &grads_as_params), &grads.features);

    let d = cfg.d;
    let objective = move |tensors: &NamedTensors| -> f64 {
        let Ok(p) = typed_from_tensors(prefix, variant, tensors, d) else {
            return f64::NAN;
        };
        let Some(v) = feature_tensor(tensors) else { return f64::NAN };
        let Ok(v) = RegionFeatureSet::new(v.clone()) else { return f64::NAN };
        match typed_forward(&v, &graph, &p) {
            Ok((v_star, _)) => loss(&upstream, &v_star),
            Err(_) => f64::NAN,
        }
    };
    Ok((params, analytic, Box::new(objective)))
}

/// Runs the finite-difference comparison for one variant. `pass` is true
/// when every report is valid and below tolerance.
pub fn run_gradcheck(cfg: &GradCheckConfig) -> Result<GradCheckOutcome, GradCheckError> {
    run_gradcheck_with_scale(cfg, fault_scale())
}

/// Same check with an explicit scale applied to the analytic gradients;
/// any scale other than 1 simulates a broken backward pass.
pub fn run_gradcheck_with_scale(
    cfg: &GradCheckConfig,
    scale: f64,
) -> Result<GradCheckOutcome, GradCheckError> {
    let (params, mut analytic, objective) = match cfg.variant {
        GraphVariant::Implicit => check_implicit(cfg)?,
        _ => check_typed(cfg)?,
    };

    if scale != 1.0 {
        scale_tensors(&mut analytic, scale);
    }

    let reports = finite_diff_check(objective.as_ref(), &params, &analytic, cfg.step)?;
    let pass = reports.iter().all(|r| r.valid && r.max_relative_error < cfg.tolerance);
    Ok(GradCheckOutcome {
        config: *cfg,
        fault_injected: scale != 1.0,
        reports,
        pass,
    })
}
