//! Relationship-graph attention encoder over detected objects.
//!
//! Builds three relationship graphs over an image's detected regions —
//! implicit (fully connected), spatial (rule-derived geometric labels), and
//! semantic (classifier-derived predicate labels) — and refines each
//! region's feature vector by attending over its graph neighborhood. The
//! per-stream word distributions of a downstream decoder are combined by
//! convex fusion.
//!
//! Everything is 64-bit, deterministic, and pure: the same inputs and seeds
//! produce bit-identical outputs. Analytic backward passes ship with a
//! finite-difference harness ([`gradcheck`]) and a naive double-loop
//! reference path ([`reference`]) that cross-check the production code.

pub mod encoder;
pub mod fusion;
pub mod geometry;
pub mod gradcheck;
pub mod graph;
pub mod numerics;
pub mod params;
pub mod reference;
pub mod rng;
pub mod synth;

pub use encoder::{
    implicit_backward, implicit_forward, refine, semantic_classifier_forward, typed_backward,
    typed_forward, AttentionMap, EncoderError, ImplicitGatParams, RegionFeatureSet,
    SemanticClassifierParams, TypedGatParams,
};
pub use fusion::{fuse, sweep, FusionError, FusionWeights, WordDistribution};
pub use geometry::{
    complement_label, geometry_feature, iou, sinusoidal_embed, spatial_classify, union_box,
    DetectedObject, GeometryError, GeometryFeature, SpatialLabel,
};
pub use graph::{
    build_implicit, build_semantic, build_spatial, EdgeLabel, GraphError, GraphVariant,
    RelationGraph,
};
pub use numerics::{finite_diff_check, stable_softmax, GradReport, Matrix, NumericsError};
pub use params::{init_model_params, load_params, save_params, ModelDims, ModelParams, ParamError};
