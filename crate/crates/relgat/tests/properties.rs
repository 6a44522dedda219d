//! Property tests over the library invariants: softmax normalization and
//! shift invariance, matmul associativity, geometric symmetries, graph
//! structure, attention row-stochasticity, and fusion convexity.

use proptest::prelude::*;
use relgat::encoder::{implicit_forward, typed_forward};
use relgat::fusion::{fuse, FusionWeights};
use relgat::geometry::{
    complement_label, geometry_feature, iou, sinusoidal_embed, spatial_classify, DetectedObject,
    GeometryFeature, SpatialLabel,
};
use relgat::graph::{build_implicit, build_spatial};
use relgat::numerics::{stable_softmax, Matrix};
use relgat::params::{init_model_params, ModelDims};
use relgat::synth;

fn any_box() -> impl Strategy<Value = DetectedObject> {
    (
        10.0..630.0f64,
        10.0..470.0f64,
        1.0..300.0f64,
        1.0..300.0f64,
        0i64..80,
    )
        .prop_map(|(cx, cy, w, h, cat)| DetectedObject::new(cx, cy, w, h, cat).unwrap())
}

proptest! {
    #[test]
    fn softmax_is_a_probability_vector(
        logits in proptest::collection::vec(-1e4..1e4f64, 1..40)
    ) {
        let p = stable_softmax(&logits, None).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn softmax_shift_invariance_is_exact_on_exact_sums(
        grid in proptest::collection::vec(-(1 << 20)..(1i64 << 20), 1..20),
        shift in -(1 << 20)..(1i64 << 20)
    ) {
        // dyadic logits and shift make every addition exact, so the
        // shifted softmax must agree bit-for-bit
        let logits: Vec<f64> = grid.iter().map(|&k| k as f64 / 256.0).collect();
        let c = shift as f64 / 256.0;
        let shifted: Vec<f64> = logits.iter().map(|&x| x + c).collect();
        let a = stable_softmax(&logits, None).unwrap();
        let b = stable_softmax(&shifted, None).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn matmul_is_associative_within_tolerance(
        a in proptest::collection::vec(-1.0..1.0f64, 64),
        b in proptest::collection::vec(-1.0..1.0f64, 64),
        c in proptest::collection::vec(-1.0..1.0f64, 64)
    ) {
        let a = Matrix::from_vec(8, 8, a).unwrap();
        let b = Matrix::from_vec(8, 8, b).unwrap();
        let c = Matrix::from_vec(8, 8, c).unwrap();
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-9);
    }

    #[test]
    fn iou_is_symmetric_exactly(a in any_box(), b in any_box()) {
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
        let v = iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn spatial_relation_presence_is_symmetric_with_complement_labels(
        a in any_box(),
        b in any_box()
    ) {
        let diag = synth::image_diag();
        let ij = spatial_classify(&a, &b, diag);
        let ji = spatial_classify(&b, &a, diag);
        match (ij, ji) {
            (SpatialLabel::NoRelation, SpatialLabel::NoRelation) => {}
            (SpatialLabel::NoRelation, _) | (_, SpatialLabel::NoRelation) => {
                prop_assert!(false, "presence not symmetric: {ij:?} vs {ji:?}");
            }
            (x, y) => prop_assert_eq!(complement_label(x).unwrap(), y),
        }
    }

    #[test]
    fn geometry_feature_is_similarity_invariant(
        a in any_box(),
        b in any_box(),
        s in 0.5..3.0f64,
        tx in -1000.0..1000.0f64,
        ty in -1000.0..1000.0f64
    ) {
        let g0 = geometry_feature(&a, &b);
        let map = |o: &DetectedObject| {
            DetectedObject::new(s * o.cx + tx, s * o.cy + ty, s * o.w, s * o.h, o.category).unwrap()
        };
        let g1 = geometry_feature(&map(&a), &map(&b));
        for m in 0..4 {
            prop_assert!((g0.0[m] - g1.0[m]).abs() < 1e-12, "component {m}");
        }
    }

    #[test]
    fn sinusoidal_embed_is_bounded_with_exact_length(
        g0 in -20.0..20.0f64,
        g1 in -20.0..20.0f64,
        g2 in -20.0..20.0f64,
        g3 in -20.0..20.0f64,
        pairs in 1usize..9
    ) {
        let d_g = pairs * 8;
        let e = sinusoidal_embed(&GeometryFeature([g0, g1, g2, g3]), d_g).unwrap();
        prop_assert_eq!(e.len(), d_g);
        prop_assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn implicit_graph_edge_count_formula(n in 1usize..64) {
        let g = build_implicit(n).unwrap();
        prop_assert_eq!(g.edges().len(), n * (n - 1));
    }

    #[test]
    fn spatial_graph_construction_is_permutation_equivariant(
        seed in 0u64..500,
        n in 2usize..8
    ) {
        let objects = synth::objects(seed, n, 640.0, 480.0);
        let perm = synth::permutation(seed ^ 0xabcd, n);
        let permuted: Vec<DetectedObject> = {
            let mut v = objects.clone();
            for (old, &new) in perm.iter().enumerate() {
                v[new] = objects[old];
            }
            v
        };
        let g = build_spatial(&objects, synth::image_diag()).unwrap();
        let gp = build_spatial(&permuted, synth::image_diag()).unwrap();
        let relabeled = g.relabeled(&perm).unwrap();
        prop_assert_eq!(gp.edges(), relabeled.edges());
    }

    #[test]
    fn attention_rows_are_stochastic_or_zero(seed in 0u64..300) {
        let n = 2 + (seed % 6) as usize;
        let d = 2 + (seed % 5) as usize;
        let v = synth::features(seed, n, d);
        let dims = ModelDims { d, d_g: 8, d_m: 8, heads: 2 };
        let model = init_model_params(seed, &dims).unwrap();

        let objects = synth::objects(seed.wrapping_add(1), n, 640.0, 480.0);
        let gi = build_implicit(n).unwrap();
        let (_, attn) = implicit_forward(&v, &objects, &gi, &model.implicit).unwrap();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| attn.weights.get(i, j)).sum();
            prop_assert!(
                (row_sum - 1.0).abs() < 1e-9 || row_sum == 0.0,
                "implicit row {i} sums to {row_sum}"
            );
        }

        let gs = build_spatial(&objects, synth::image_diag()).unwrap();
        let (_, attn) = typed_forward(&v, &gs, &model.spatial).unwrap();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| attn.weights.get(i, j)).sum();
            prop_assert!((row_sum - 1.0).abs() < 1e-9, "spatial row {i} sums to {row_sum}");
        }
    }

    #[test]
    fn fusion_stays_on_the_simplex(
        seed in 0u64..1000,
        alpha in 0.0..0.98f64,
        frac in 0.0..1.0f64
    ) {
        let beta = (1.0 - alpha) * frac * 0.99;
        let w = FusionWeights::new(alpha, beta).unwrap();
        let vocab = 3 + (seed % 40) as usize;
        let spa = synth::word_distribution(seed, vocab);
        let sem = synth::word_distribution(seed ^ 1, vocab);
        let imp = synth::word_distribution(seed ^ 2, vocab);
        let out = fuse(&spa, &sem, &imp, &w).unwrap();
        let sum: f64 = out.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(out.probs().iter().all(|&p| p >= 0.0));
    }
}
