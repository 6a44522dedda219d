//! Cross-checks the production attention paths against the naive
//! double-loop reference implementations on seeded random instances.

use relgat::encoder::{implicit_forward, typed_forward, RegionFeatureSet};
use relgat::graph::{build_implicit, build_semantic, build_spatial, GraphVariant};
use relgat::params::{init_model_params, ModelDims};
use relgat::reference::{ref_implicit_forward, ref_typed_forward};
use relgat::rng::child_seed;
use relgat::synth;

fn sizes_for(seed: u64) -> (usize, usize) {
    let n = 1 + (child_seed(seed, 100) % 10) as usize;
    let d = 1 + (child_seed(seed, 101) % 16) as usize;
    (n, d)
}

fn params_for(seed: u64, d: usize) -> relgat::params::ModelParams {
    let dims = ModelDims { d, d_g: 16, d_m: 8, heads: 2 };
    init_model_params(child_seed(seed, 3), &dims).unwrap()
}

#[test]
fn implicit_matches_reference_on_seeded_instances() {
    for seed in 0..25u64 {
        let (n, d) = sizes_for(seed);
        let v = synth::features(child_seed(seed, 1), n, d);
        let objects = synth::objects(child_seed(seed, 2), n, synth::IMAGE_WIDTH, synth::IMAGE_HEIGHT);
        let g = build_implicit(n).unwrap();
        let p = params_for(seed, d).implicit;

        let (v_star, attn) = implicit_forward(&v, &objects, &g, &p).unwrap();
        let (rv, rw, rs, rg) = ref_implicit_forward(v.matrix(), &objects, &g, &p);

        assert!(v_star.matrix().max_abs_diff(&rv) < 1e-12, "v_star seed {seed}");
        assert!(attn.weights.max_abs_diff(&rw) < 1e-12, "weights seed {seed}");
        assert!(attn.raw_similarity.max_abs_diff(&rs) < 1e-12, "sim seed {seed}");
        assert!(attn.geometry_gate.unwrap().max_abs_diff(&rg) < 1e-12, "gate seed {seed}");
    }
}

#[test]
fn spatial_matches_reference_on_seeded_instances() {
    for seed in 0..25u64 {
        let (n, d) = sizes_for(seed);
        let v = synth::features(child_seed(seed, 1), n, d);
        let objects = synth::objects(child_seed(seed, 2), n, synth::IMAGE_WIDTH, synth::IMAGE_HEIGHT);
        let g = build_spatial(&objects, synth::image_diag()).unwrap();
        let p = params_for(seed, d).spatial;

        let (v_star, attn) = typed_forward(&v, &g, &p).unwrap();
        let (rv, rw, rs) = ref_typed_forward(v.matrix(), &g, &p);

        assert!(v_star.matrix().max_abs_diff(&rv) < 1e-12, "v_star seed {seed}");
        assert!(attn.weights.max_abs_diff(&rw) < 1e-12, "weights seed {seed}");
        assert!(attn.raw_similarity.max_abs_diff(&rs) < 1e-12, "sim seed {seed}");
    }
}

#[test]
fn semantic_matches_reference_on_seeded_instances() {
    for seed in 0..25u64 {
        let (n, d) = sizes_for(seed);
        let v = synth::features(child_seed(seed, 1), n, d);
        let g = build_semantic(n, &synth::semantic_predictions(child_seed(seed, 5), n), 0.5).unwrap();
        let p = params_for(seed, d).semantic;

        let (v_star, attn) = typed_forward(&v, &g, &p).unwrap();
        let (rv, rw, rs) = ref_typed_forward(v.matrix(), &g, &p);

        assert!(v_star.matrix().max_abs_diff(&rv) < 1e-12, "v_star seed {seed}");
        assert!(attn.weights.max_abs_diff(&rw) < 1e-12, "weights seed {seed}");
        assert!(attn.raw_similarity.max_abs_diff(&rs) < 1e-12, "sim seed {seed}");
    }
}

#[test]
fn degenerate_sizes_agree_between_paths() {
    // n = 1 and d = 1 exercise the empty-support and single-entry branches
    let v = RegionFeatureSet::new(relgat::numerics::Matrix::from_vec(1, 1, vec![0.5]).unwrap())
        .unwrap();
    let objects = synth::objects(9, 1, synth::IMAGE_WIDTH, synth::IMAGE_HEIGHT);
    let g = build_implicit(1).unwrap();
    assert_eq!(g.variant(), GraphVariant::Implicit);
    let dims = ModelDims { d: 1, d_g: 8, d_m: 8, heads: 2 };
    let p = init_model_params(0, &dims).unwrap().implicit;
    let (v_star, _) = implicit_forward(&v, &objects, &g, &p).unwrap();
    let (rv, _, _, _) = ref_implicit_forward(v.matrix(), &objects, &g, &p);
    assert_eq!(v_star.matrix(), &rv);
}
