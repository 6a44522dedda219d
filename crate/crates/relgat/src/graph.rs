//! Relationship-graph data model and constructors for the implicit, spatial,
//! and semantic variants.
//!
//! Graphs are immutable after construction. Edges are held in ascending
//! `(src, dst)` order and per-node in-neighbor lists are precomputed in
//! ascending source order, so every traversal is bit-reproducible.

use crate::geometry::{spatial_classify_with, DetectedObject, SpatialLabel, SpatialRules};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of semantic classes including no-relation (class 0).
pub const SEMANTIC_CLASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node index {index} out of range for graph of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("prediction for pair ({src}, {dst}) is not a distribution: {reason}")]
    BadDistribution { src: usize, dst: usize, reason: String },
    #[error("duplicate prediction for pair ({src}, {dst})")]
    DuplicatePair { src: usize, dst: usize },
    #[error("prediction pair ({0}, {0}) is a self-pair; self-loops are implicit")]
    SelfPair(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphVariant {
    Implicit,
    Spatial,
    Semantic,
}

/// Edge label: untyped implicit edges, rule-derived spatial labels,
/// classifier-derived semantic classes (1..=15), or the explicit self-loop
/// of the typed graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    Implicit,
    Spatial(SpatialLabel),
    Semantic(u8),
    SelfLoop,
}

impl EdgeLabel {
    /// Stable key used in parameter files and JSON output.
    pub fn key(&self) -> String {
        match self {
            EdgeLabel::Implicit => "implicit".to_string(),
            EdgeLabel::Spatial(l) => l.name(),
            EdgeLabel::Semantic(c) => format!("class_{c:02}"),
            EdgeLabel::SelfLoop => "self_loop".to_string(),
        }
    }

    /// Numeric id for JSON output: spatial labels use their class id,
    /// semantic labels their class index, self-loops and implicit edges 0.
    pub fn id(&self) -> u8 {
        match self {
            EdgeLabel::Implicit | EdgeLabel::SelfLoop => 0,
            EdgeLabel::Spatial(l) => l.class_id(),
            EdgeLabel::Semantic(c) => *c,
        }
    }
}

/// Canonical label family of a typed graph variant: the self-loop label
/// first, then the edge labels in ascending class-id order. Empty for the
/// implicit variant, whose edges are unlabeled.
pub fn label_set(variant: GraphVariant) -> Vec<EdgeLabel> {
    match variant {
        GraphVariant::Implicit => Vec::new(),
        GraphVariant::Spatial => {
            let mut v = vec![EdgeLabel::SelfLoop];
            v.extend(SpatialLabel::edge_labels().into_iter().map(EdgeLabel::Spatial));
            v
        }
        GraphVariant::Semantic => {
            let mut v = vec![EdgeLabel::SelfLoop];
            v.extend((1..SEMANTIC_CLASSES as u8).map(EdgeLabel::Semantic));
            v
        }
    }
}

/// Position of `label` in [`label_set`] for the given variant, or `None`
/// when the label cannot appear there.
pub fn label_index(variant: GraphVariant, label: EdgeLabel) -> Option<usize> {
    match (variant, label) {
        (GraphVariant::Spatial | GraphVariant::Semantic, EdgeLabel::SelfLoop) => Some(0),
        (GraphVariant::Spatial, EdgeLabel::Spatial(l)) if l != SpatialLabel::NoRelation => {
            Some(l.class_id() as usize)
        }
        (GraphVariant::Semantic, EdgeLabel::Semantic(c))
            if (1..SEMANTIC_CLASSES as u8).contains(&c) =>
        {
            Some(c as usize)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: EdgeLabel,
    /// Classifier confidence for semantic edges.
    pub score: Option<f64>,
}

/// Typed directed edge set over `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationGraph {
    n: usize,
    variant: GraphVariant,
    edges: Vec<Edge>,
    /// Per-node incoming edges `(src, label)`, ascending by src.
    incoming: Vec<Vec<(usize, EdgeLabel)>>,
}

impl RelationGraph {
    fn assemble(n: usize, variant: GraphVariant, mut edges: Vec<Edge>) -> RelationGraph {
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut incoming = vec![Vec::new(); n];
        for e in &edges {
            incoming[e.dst].push((e.src, e.label));
        }
        for list in &mut incoming {
            list.sort_by_key(|&(src, _)| src);
        }
        RelationGraph { n, variant, edges, incoming }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> GraphVariant {
        self.variant
    }

    /// All edges in ascending `(src, dst)` order, self-loops included.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges without self-loops, for external emission.
    pub fn edges_without_self_loops(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.label != EdgeLabel::SelfLoop)
    }

    /// Incoming edges of node `i` as `(src, label)`, ascending by src.
    /// Includes the self-loop on typed graphs.
    pub fn in_neighbors(&self, i: usize) -> Result<&[(usize, EdgeLabel)], GraphError> {
        self.incoming
            .get(i)
            .map(Vec::as_slice)
            .ok_or(GraphError::IndexOutOfRange { index: i, n: self.n })
    }

    /// The graph with every node index mapped through `perm`
    /// (`new_index = perm[old_index]`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<RelationGraph, GraphError> {
        if perm.len() != self.n {
            return Err(GraphError::IndexOutOfRange { index: perm.len(), n: self.n });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(GraphError::IndexOutOfRange { index: p, n: self.n });
            }
            seen[p] = true;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { src: perm[e.src], dst: perm[e.dst], label: e.label, score: e.score })
            .collect();
        Ok(RelationGraph::assemble(self.n, self.variant, edges))
    }
}

/// Fully-connected implicit graph: all `n(n-1)` ordered pairs, no
/// self-loops.
pub fn build_implicit(n: usize) -> Result<RelationGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut edges = Vec::with_capacity(n * (n - 1));
    for src in 0..n {
        for dst in 0..n {
            if src != dst {
                edges.push(Edge { src, dst, label: EdgeLabel::Implicit, score: None });
            }
        }
    }
    Ok(RelationGraph::assemble(n, GraphVariant::Implicit, edges))
}

/// Spatial graph from box geometry: one labeled edge per ordered pair whose
/// classification is not no-relation, plus one self-loop per node. The
/// classifier's complement structure makes the edge set mirror-symmetric.
pub fn build_spatial(
    objects: &[DetectedObject],
    image_diag: f64,
) -> Result<RelationGraph, GraphError> {
    build_spatial_with(&SpatialRules::default(), objects, image_diag)
}

pub fn build_spatial_with(
    rules: &SpatialRules,
    objects: &[DetectedObject],
    image_diag: f64,
) -> Result<RelationGraph, GraphError> {
    let n = objects.len();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut edges = Vec::new();
    for src in 0..n {
        edges.push(Edge { src, dst: src, label: EdgeLabel::SelfLoop, score: None });
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let label = spatial_classify_with(rules, &objects[src], &objects[dst], image_diag);
            if label != SpatialLabel::NoRelation {
                edges.push(Edge { src, dst, label: EdgeLabel::Spatial(label), score: None });
            }
        }
    }
    Ok(RelationGraph::assemble(n, GraphVariant::Spatial, edges))
}

/// Semantic graph from per-pair class distributions: the argmax class wins
/// when it is not no-relation and its probability clears `threshold`.
/// Self-loops are added per node.
pub fn build_semantic(
    n: usize,
    edge_predictions: &[(usize, usize, Vec<f64>)],
    threshold: f64,
) -> Result<RelationGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let mut seen = std::collections::HashSet::new();
    let mut edges: Vec<Edge> =
        (0..n).map(|i| Edge { src: i, dst: i, label: EdgeLabel::SelfLoop, score: None }).collect();
    for (src, dst, probs) in edge_predictions {
        let (src, dst) = (*src, *dst);
        if src >= n {
            return Err(GraphError::IndexOutOfRange { index: src, n });
        }
        if dst >= n {
            return Err(GraphError::IndexOutOfRange { index: dst, n });
        }
        if src == dst {
            return Err(GraphError::SelfPair(src));
        }
        if !seen.insert((src, dst)) {
            return Err(GraphError::DuplicatePair { src, dst });
        }
        validate_distribution(src, dst, probs)?;
        let (argmax, p) = probs
            .iter()
            .copied()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if argmax != 0 && p >= threshold {
            edges.push(Edge {
                src,
                dst,
                label: EdgeLabel::Semantic(argmax as u8),
                score: Some(p),
            });
        }
    }
    Ok(RelationGraph::assemble(n, GraphVariant::Semantic, edges))
}

fn validate_distribution(src: usize, dst: usize, probs: &[f64]) -> Result<(), GraphError> {
    if probs.len() != SEMANTIC_CLASSES {
        return Err(GraphError::BadDistribution {
            src,
            dst,
            reason: format!("expected {} classes, got {}", SEMANTIC_CLASSES, probs.len()),
        });
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(GraphError::BadDistribution {
            src,
            dst,
            reason: "entries must be finite and nonnegative".to_string(),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(GraphError::BadDistribution {
            src,
            dst,
            reason: format!("probabilities sum to {sum}"),
        });
    }
    Ok(())
}
