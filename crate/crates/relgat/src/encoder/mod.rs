//! Graph-attention forward and backward passes over region features.
//!
//! Three encoders share the residual refinement contract
//! `v'_i = v_i + v*_i`: the implicit variant gates attention by box
//! geometry, the typed variant selects transformation matrices by edge
//! direction and bias vectors by edge label, and the semantic-relationship
//! classifier scores ordered region pairs.

mod classifier;
mod implicit;
mod typed;

pub use classifier::{
    semantic_classifier_forward, SemanticClassifierParams, TransformerLayerParams, LAYER_NORM_EPS,
};
pub use implicit::{implicit_backward, implicit_forward, ImplicitGatParams, ImplicitGradients};
pub use typed::{typed_backward, typed_forward, Direction, TypedGatParams, TypedGradients};

use crate::numerics::{Matrix, NumericsError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncoderError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch { context: &'static str, expected: String, got: String },
    #[error("no parameters for edge label '{label}'")]
    MissingLabel { label: String },
    #[error("graph variant {got:?} not usable here, expected {expected}")]
    WrongVariant { expected: &'static str, got: crate::graph::GraphVariant },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// `n x d` matrix of region features, one row per detected region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionFeatureSet {
    features: Matrix,
}

impl RegionFeatureSet {
    pub fn new(features: Matrix) -> Result<Self, EncoderError> {
        if !features.is_finite() {
            return Err(EncoderError::NonFinite("region features"));
        }
        Ok(RegionFeatureSet { features })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d(&self) -> usize {
        self.features.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn into_matrix(self) -> Matrix {
        self.features
    }
}

/// Row-stochastic attention coefficients plus the raw similarities they were
/// derived from. Rows with empty support are all-zero. The geometry gate is
/// present only for the implicit variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub weights: Matrix,
    pub raw_similarity: Matrix,
    pub geometry_gate: Option<Matrix>,
}

/// Residual refinement `v' = v + v*`.
pub fn refine(
    v: &RegionFeatureSet,
    v_star: &RegionFeatureSet,
) -> Result<RegionFeatureSet, EncoderError> {
    if v.matrix().dims() != v_star.matrix().dims() {
        return Err(EncoderError::ShapeMismatch {
            context: "refine",
            expected: format!("{}x{}", v.n(), v.d()),
            got: format!("{}x{}", v_star.n(), v_star.d()),
        });
    }
    let sum = v.matrix().add(v_star.matrix())?;
    Ok(RegionFeatureSet { features: sum })
}

/// Internal constructor that skips the finite check; used where the result
/// is produced by library math over validated inputs.
pub(crate) fn feature_set_unchecked(features: Matrix) -> RegionFeatureSet {
    RegionFeatureSet { features }
}
