//! Output document schemas and the SVG attention overlay. All documents
//! carry `format_version` and serialize deterministically.

use relgat::encoder::AttentionMap;
use relgat::geometry::DetectedObject;
use relgat::numerics::Matrix;
use serde::Serialize;

pub const OUTPUT_FORMAT_VERSION: u32 = 1;

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

#[derive(Debug, Serialize)]
pub struct EdgeOut {
    pub src: usize,
    pub dst: usize,
    pub label_id: u8,
    pub label_name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RelationsOut {
    pub format_version: u32,
    pub image_id: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub edges: Vec<EdgeOut>,
}

#[derive(Debug, Serialize)]
pub struct AttentionOut {
    pub weights: Vec<Vec<f64>>,
    pub raw_similarity: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_gate: Option<Vec<Vec<f64>>>,
}

impl AttentionOut {
    pub fn from_map(attn: &AttentionMap) -> Self {
        AttentionOut {
            weights: matrix_rows(&attn.weights),
            raw_similarity: matrix_rows(&attn.raw_similarity),
            geometry_gate: attn.geometry_gate.as_ref().map(matrix_rows),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GraphEncodeOut {
    pub graph: String,
    pub refined: Vec<Vec<f64>>,
    pub attention: AttentionOut,
}

#[derive(Debug, Serialize)]
pub struct EncodeOut {
    pub format_version: u32,
    pub image_id: String,
    pub results: Vec<GraphEncodeOut>,
}

#[derive(Debug, Serialize)]
pub struct SourceWeightOut {
    pub src: usize,
    pub weight: f64,
    pub bbox: [f64; 4],
}

#[derive(Debug, Serialize)]
pub struct NodeTopKOut {
    pub node: usize,
    pub bbox: [f64; 4],
    pub sources: Vec<SourceWeightOut>,
}

#[derive(Debug, Serialize)]
pub struct TopKOut {
    pub format_version: u32,
    pub image_id: String,
    pub graph: String,
    pub top_k: usize,
    pub nodes: Vec<NodeTopKOut>,
}

#[derive(Debug, Serialize)]
pub struct FuseOut {
    pub format_version: u32,
    pub alpha: f64,
    pub beta: f64,
    pub implicit_weight: f64,
    pub probs: Vec<f64>,
}

pub fn bbox_of(o: &DetectedObject) -> [f64; 4] {
    [o.cx, o.cy, o.w, o.h]
}

/// Box overlay for one node's top-k attention sources: every region drawn
/// as an outline, the target node highlighted, sources filled with opacity
/// proportional to their attention weight.
pub fn attention_svg(
    width: f64,
    height: f64,
    objects: &[DetectedObject],
    node: usize,
    sources: &[(usize, f64)],
) -> String {
    let max_w = sources.iter().map(|&(_, w)| w).fold(0.0_f64, f64::max);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    for o in objects {
        out.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
             stroke=\"#999999\" stroke-width=\"1\"/>\n",
            o.x0(),
            o.y0(),
            o.w,
            o.h
        ));
    }
    for &(src, w) in sources {
        let o = &objects[src];
        let opacity = if max_w > 0.0 { 0.85 * w / max_w } else { 0.0 };
        out.push_str(&format!(
            "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#1f77b4\" fill-opacity=\"{:.4}\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            o.x0(),
            o.y0(),
            o.w,
            o.h,
            opacity
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#1f77b4\">{}: {:.4}</text>\n",
            o.x0() + 2.0,
            o.y0() + 13.0,
            src,
            w
        ));
    }
    let t = &objects[node];
    out.push_str(&format!(
        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" \
         stroke=\"#d62728\" stroke-width=\"2.5\"/>\n",
        t.x0(),
        t.y0(),
        t.w,
        t.h
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#d62728\">node {}</text>\n",
        t.x0() + 2.0,
        t.y1() - 4.0,
        node
    ));
    out.push_str("</svg>\n");
    out
}
