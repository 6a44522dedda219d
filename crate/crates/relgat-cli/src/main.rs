//! `relgat`: relationship graphs over detected objects, graph-attention
//! feature refinement, attention export, probability fusion, and the
//! numerical verification commands.
//!
//! Exit codes: 0 success, 1 failed gradient check, 2 usage or validation
//! error. `RELGAT_SEED` overrides the default seed 0 wherever `--seed` is
//! not given.

mod detfile;
mod emit;

use clap::{Parser, Subcommand, ValueEnum};
use detfile::DetectionFile;
use emit::{
    bbox_of, matrix_rows, AttentionOut, EdgeOut, EncodeOut, FuseOut, GraphEncodeOut, NodeTopKOut,
    RelationsOut, SourceWeightOut, TopKOut, OUTPUT_FORMAT_VERSION,
};
use relgat::encoder::{
    implicit_forward, refine, semantic_classifier_forward, typed_forward, RegionFeatureSet,
};
use relgat::fusion::{
    constant_scorer, peaked_scorer, render_table, sweep, FusionWeights, SweepGrid,
    WordDistribution,
};
use relgat::gradcheck::{run_gradcheck, GradCheckConfig, GradCheckOutcome};
use relgat::graph::{build_implicit, build_semantic, build_spatial, GraphVariant, RelationGraph};
use relgat::params::{init_model_params, load_params, params_to_json, ModelDims, ModelParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relgat", version, about = "Relationship-graph attention encoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract spatial or semantic relationship edges from a detection file
    Relations {
        /// Detection JSON file
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: RelationsMode,
        /// Parameter file (required in semantic mode)
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Acceptance threshold on the argmax class probability
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Write the JSON document here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Refine region features through the requested graph-attention streams
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Subset of imp,spa,sem
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![GraphKind::Imp, GraphKind::Spa, GraphKind::Sem])]
        graphs: Vec<GraphKind>,
        /// Semantic edge threshold
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Export each node's top-k incoming attention weights
    Attn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum)]
        graph: GraphKind,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        /// Node highlighted in the SVG overlay
        #[arg(long, default_value_t = 0)]
        node: usize,
        /// Write an SVG overlay of the chosen node's top-k sources
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fuse the three per-stream word distributions
    Fuse {
        /// Spatial-stream distribution JSON
        #[arg(long)]
        spatial: PathBuf,
        /// Semantic-stream distribution JSON
        #[arg(long)]
        semantic: PathBuf,
        /// Implicit-stream distribution JSON
        #[arg(long)]
        implicit: PathBuf,
        #[arg(long, default_value_t = FusionWeights::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = FusionWeights::DEFAULT_BETA)]
        beta: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a scorer over the fusion-weight grid
    Sweep {
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Builtin scorer
        #[arg(long, value_enum, default_value_t = BuiltinScorer::Peaked)]
        scorer: BuiltinScorer,
        /// External command, invoked as `sh -c "<cmd> <alpha> <beta>"`;
        /// stdout must be a single number
        #[arg(long)]
        scorer_cmd: Option<String>,
        /// Emit the JSON grid instead of the aligned table
        #[arg(long)]
        json: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare analytic gradients against central finite differences
    Gradcheck {
        #[arg(long, value_enum)]
        graph: GraphKind,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = relgat::gradcheck::DEFAULT_N)]
        n: usize,
        #[arg(long, default_value_t = relgat::gradcheck::DEFAULT_D)]
        d: usize,
        #[arg(long, default_value_t = relgat::gradcheck::DEFAULT_D_G)]
        d_g: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded, Glorot-initialized parameter file
    InitParams {
        /// Region feature width
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 64)]
        d_g: usize,
        #[arg(long, default_value_t = 256)]
        d_m: usize,
        #[arg(long, default_value_t = 4)]
        heads: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphKind {
    Imp,
    Spa,
    Sem,
}

impl GraphKind {
    fn name(&self) -> &'static str {
        match self {
            GraphKind::Imp => "imp",
            GraphKind::Spa => "spa",
            GraphKind::Sem => "sem",
        }
    }

    fn variant(&self) -> GraphVariant {
        match self {
            GraphKind::Imp => GraphVariant::Implicit,
            GraphKind::Spa => GraphVariant::Spatial,
            GraphKind::Sem => GraphVariant::Semantic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelationsMode {
    Spatial,
    Semantic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BuiltinScorer {
    Peaked,
    Constant,
}

#[derive(Debug, Deserialize)]
struct DistributionFile {
    format_version: u32,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SweepOut {
    format_version: u32,
    #[serde(flatten)]
    grid: SweepGrid,
}

#[derive(Debug, Serialize)]
struct GradcheckOut {
    format_version: u32,
    #[serde(flatten)]
    outcome: GradCheckOutcome,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("RELGAT_SEED") {
        Ok(v) => v.parse().map_err(|_| format!("RELGAT_SEED is not an integer: '{v}'")),
        Err(_) => Ok(0),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

fn deliver(doc: String, output: Option<&Path>) -> Result<(), String> {
    match output {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn load_params_for(det: &DetectionFile, path: &Path) -> Result<ModelParams, String> {
    let params = load_params(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if params.dims.d != det.feature_dim() {
        return Err(format!(
            "regions[].feature dimension {} does not match parameter dimension {}",
            det.feature_dim(),
            params.dims.d
        ));
    }
    Ok(params)
}

/// Surrogate union-box feature: elementwise mean of the two region
/// features (region features are ingested as data; no extractor runs here).
fn union_feature(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| (x + y) / 2.0).collect()
}

fn classify_all_pairs(
    det: &DetectionFile,
    params: &ModelParams,
) -> Result<Vec<(usize, usize, Vec<f64>)>, String> {
    let features = det.features();
    let n = det.n();
    let mut preds = Vec::with_capacity(n.saturating_mul(n.saturating_sub(1)));
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let u = union_feature(features.row(src), features.row(dst));
            let probs =
                semantic_classifier_forward(features.row(src), features.row(dst), &u, &params.classifier)
                    .map_err(|e| e.to_string())?;
            preds.push((src, dst, probs));
        }
    }
    Ok(preds)
}

fn semantic_graph(
    det: &DetectionFile,
    params: &ModelParams,
    threshold: f64,
) -> Result<RelationGraph, String> {
    let preds = classify_all_pairs(det, params)?;
    build_semantic(det.n(), &preds, threshold).map_err(|e| e.to_string())
}

fn forward_for(
    kind: GraphKind,
    det: &DetectionFile,
    features: &RegionFeatureSet,
    params: &ModelParams,
    threshold: f64,
) -> Result<(RegionFeatureSet, relgat::encoder::AttentionMap, RelationGraph), String> {
    let (graph, out) = match kind {
        GraphKind::Imp => {
            let g = build_implicit(det.n()).map_err(|e| e.to_string())?;
            let out = implicit_forward(features, &det.objects(), &g, &params.implicit)
                .map_err(|e| e.to_string())?;
            (g, out)
        }
        GraphKind::Spa => {
            let g = build_spatial(&det.objects(), det.image_diag()).map_err(|e| e.to_string())?;
            let out = typed_forward(features, &g, &params.spatial).map_err(|e| e.to_string())?;
            (g, out)
        }
        GraphKind::Sem => {
            let g = semantic_graph(det, params, threshold)?;
            let out = typed_forward(features, &g, &params.semantic).map_err(|e| e.to_string())?;
            (g, out)
        }
    };
    let (v_star, attn) = out;
    Ok((v_star, attn, graph))
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Relations { input, mode, weights, threshold, output } => {
            let det = DetectionFile::load(&input)?;
            let (mode_name, thr, graph) = match mode {
                RelationsMode::Spatial => {
                    let g = build_spatial(&det.objects(), det.image_diag())
                        .map_err(|e| e.to_string())?;
                    ("spatial", None, g)
                }
                RelationsMode::Semantic => {
                    let weights_path = weights
                        .ok_or_else(|| "semantic mode requires --weights".to_string())?;
                    let params = load_params_for(&det, &weights_path)?;
                    ("semantic", Some(threshold), semantic_graph(&det, &params, threshold)?)
                }
            };
            let edges = graph
                .edges_without_self_loops()
                .map(|e| EdgeOut {
                    src: e.src,
                    dst: e.dst,
                    label_id: e.label.id(),
                    label_name: e.label.key(),
                    score: e.score,
                })
                .collect();
            let doc = RelationsOut {
                format_version: OUTPUT_FORMAT_VERSION,
                image_id: det.image_id.clone(),
                mode: mode_name.to_string(),
                threshold: thr,
                edges,
            };
            deliver(to_json(&doc)?, output.as_deref())?;
            Ok(0)
        }

        Command::Encode { input, params, graphs, threshold, output } => {
            let det = DetectionFile::load(&input)?;
            let model = load_params_for(&det, &params)?;
            let features = det.features();
            let mut results = Vec::new();
            for kind in [GraphKind::Imp, GraphKind::Spa, GraphKind::Sem] {
                if !graphs.contains(&kind) {
                    continue;
                }
                let (v_star, attn, _) = forward_for(kind, &det, &features, &model, threshold)?;
                let refined = refine(&features, &v_star).map_err(|e| e.to_string())?;
                results.push(GraphEncodeOut {
                    graph: kind.name().to_string(),
                    refined: matrix_rows(refined.matrix()),
                    attention: AttentionOut::from_map(&attn),
                });
            }
            let doc = EncodeOut {
                format_version: OUTPUT_FORMAT_VERSION,
                image_id: det.image_id.clone(),
                results,
            };
            deliver(to_json(&doc)?, output.as_deref())?;
            Ok(0)
        }

        Command::Attn { input, params, graph, top_k, node, svg, threshold, output } => {
            if top_k == 0 {
                return Err("--top-k must be at least 1".to_string());
            }
            let det = DetectionFile::load(&input)?;
            let model = load_params_for(&det, &params)?;
            let features = det.features();
            let objects = det.objects();
            if node >= det.n() {
                return Err(format!("--node {node} out of range for {} regions", det.n()));
            }
            let (_, attn, relation_graph) = forward_for(graph, &det, &features, &model, threshold)?;

            let max_k = det.n() - 1;
            let eff_k = if top_k > max_k {
                eprintln!("warning: --top-k {top_k} exceeds n-1 = {max_k}, clamping");
                max_k
            } else {
                top_k
            };

            let mut nodes = Vec::with_capacity(det.n());
            for i in 0..det.n() {
                let mut sources: Vec<(usize, f64)> = relation_graph
                    .in_neighbors(i)
                    .map_err(|e| e.to_string())?
                    .iter()
                    .filter(|&&(src, _)| src != i)
                    .map(|&(src, _)| (src, attn.weights.get(i, src)))
                    .collect();
                sources.sort_by(|a, b| {
                    b.1.partial_cmp(&a.1).expect("weights are finite").then(a.0.cmp(&b.0))
                });
                sources.truncate(eff_k);
                nodes.push(NodeTopKOut {
                    node: i,
                    bbox: bbox_of(&objects[i]),
                    sources: sources
                        .iter()
                        .map(|&(src, weight)| SourceWeightOut {
                            src,
                            weight,
                            bbox: bbox_of(&objects[src]),
                        })
                        .collect(),
                });
            }

            if let Some(svg_path) = svg {
                let picked: Vec<(usize, f64)> =
                    nodes[node].sources.iter().map(|s| (s.src, s.weight)).collect();
                let svg_doc = emit::attention_svg(
                    det.image_width,
                    det.image_height,
                    &objects,
                    node,
                    &picked,
                );
                std::fs::write(&svg_path, svg_doc)
                    .map_err(|e| format!("cannot write {}: {e}", svg_path.display()))?;
            }

            let doc = TopKOut {
                format_version: OUTPUT_FORMAT_VERSION,
                image_id: det.image_id.clone(),
                graph: graph.name().to_string(),
                top_k: eff_k,
                nodes,
            };
            deliver(to_json(&doc)?, output.as_deref())?;
            Ok(0)
        }

        Command::Fuse { spatial, semantic, implicit, alpha, beta, output } => {
            let load = |path: &Path| -> Result<WordDistribution, String> {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let file: DistributionFile =
                    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                if file.format_version != OUTPUT_FORMAT_VERSION {
                    return Err(format!(
                        "{}: format_version {} unsupported",
                        path.display(),
                        file.format_version
                    ));
                }
                WordDistribution::new(file.probs).map_err(|e| format!("{}: {e}", path.display()))
            };
            let p_spa = load(&spatial)?;
            let p_sem = load(&semantic)?;
            let p_imp = load(&implicit)?;
            let w = FusionWeights::new(alpha, beta).map_err(|e| e.to_string())?;
            let fused = relgat::fusion::fuse(&p_spa, &p_sem, &p_imp, &w).map_err(|e| e.to_string())?;
            let doc = FuseOut {
                format_version: OUTPUT_FORMAT_VERSION,
                alpha: w.alpha(),
                beta: w.beta(),
                implicit_weight: w.implicit_weight(),
                probs: fused.probs().to_vec(),
            };
            deliver(to_json(&doc)?, output.as_deref())?;
            Ok(0)
        }

        Command::Sweep { step, scorer, scorer_cmd, json, output } => {
            let grid = match scorer_cmd {
                Some(cmd) => {
                    let external = |w: &FusionWeights| -> Result<f64, String> {
                        let out = std::process::Command::new("sh")
                            .arg("-c")
                            .arg(format!("{cmd} {} {}", w.alpha(), w.beta()))
                            .output()
                            .map_err(|e| e.to_string())?;
                        if !out.status.success() {
                            return Err(format!(
                                "scorer exited with {}: {}",
                                out.status,
                                String::from_utf8_lossy(&out.stderr).trim()
                            ));
                        }
                        String::from_utf8_lossy(&out.stdout)
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| format!("scorer output not a number: {e}"))
                    };
                    sweep(external, step)
                }
                None => match scorer {
                    BuiltinScorer::Peaked => sweep(peaked_scorer(0.3, 0.3), step),
                    BuiltinScorer::Constant => sweep(constant_scorer(1.0), step),
                },
            }
            .map_err(|e| e.to_string())?;

            let doc = if json {
                to_json(&SweepOut { format_version: OUTPUT_FORMAT_VERSION, grid })?
            } else {
                render_table(&grid)
            };
            deliver(doc, output.as_deref())?;
            Ok(0)
        }

        Command::Gradcheck { graph, seed, n, d, d_g, output } => {
            if graph == GraphKind::Imp && (d_g == 0 || d_g % 8 != 0) {
                return Err(format!("--d-g must be a positive multiple of 8, got {d_g}"));
            }
            let seed = resolve_seed(seed)?;
            let cfg = GradCheckConfig { n, d, d_g, ..GradCheckConfig::new(graph.variant(), seed) };
            let outcome = run_gradcheck(&cfg).map_err(|e| e.to_string())?;

            for r in &outcome.reports {
                let status = if !r.valid {
                    "INVALID"
                } else if r.max_relative_error < cfg.tolerance {
                    "ok"
                } else {
                    "FAIL"
                };
                eprintln!(
                    "{:7} {:32} max_rel_err={:.3e} worst=({}, {})",
                    status, r.parameter_name, r.max_relative_error, r.worst_index.0, r.worst_index.1
                );
            }
            eprintln!(
                "gradcheck {} seed={} n={} d={} d_g={}: {}",
                graph.name(),
                seed,
                n,
                d,
                d_g,
                if outcome.pass { "PASSED" } else { "FAILED" }
            );

            let pass = outcome.pass;
            let doc = GradcheckOut { format_version: OUTPUT_FORMAT_VERSION, outcome };
            deliver(to_json(&doc)?, output.as_deref())?;
            Ok(if pass { 0 } else { 1 })
        }

        Command::InitParams { d, d_g, d_m, heads, seed, output } => {
            let seed = resolve_seed(seed)?;
            let dims = ModelDims { d, d_g, d_m, heads };
            let params = init_model_params(seed, &dims).map_err(|e| e.to_string())?;
            deliver(params_to_json(&params).map_err(|e| e.to_string())?, output.as_deref())?;
            Ok(0)
        }
    }
}
