mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support_constraints::compile::{compile_formula, compile_min_affine};
use support_constraints::grounding::{
    build_grounding_index, expand_quantifiers, GroundingIndex, PredicateDecl, Sample, SampleSets,
};
use support_constraints::logic::{parse_formula, to_nnf};

use common::{grounding_len, random_formula, random_point, render, truth};

fn index(samples: usize) -> GroundingIndex {
    let decls = [
        PredicateDecl::new("p1", &["X"]),
        PredicateDecl::new("p2", &["X"]),
        PredicateDecl::new("p3", &["X", "X"]),
    ];
    let mut sets = SampleSets::default();
    sets.domains.insert(
        "X".into(),
        (0..samples).map(|i| Sample::new(&format!("s{}", i + 1), &[i as f64])).collect(),
    );
    build_grounding_index(&decls, &sets).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn max_of_pieces_is_one_minus_truth(seed in any::<u64>(), samples in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = index(samples);
        prop_assert_eq!(idx.len(), grounding_len(samples));
        let node = random_formula(&mut rng, 4, samples);
        let text = render(&node, &mut rng);
        let formula = parse_formula(&text, &idx.signature()).unwrap();
        let block = compile_formula(&formula, &idx, "f").unwrap();
        for _ in 0..200 {
            let p = random_point(&mut rng, idx.len());
            let expected = 1.0 - truth(&node, &p, samples, &mut Vec::new());
            let got = block.value(&p);
            prop_assert!((got - expected).abs() <= 1e-12, "{text} at {p:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn affine_set_is_the_truth_function(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = index(2);
        let node = random_formula(&mut rng, 4, 2);
        let text = render(&node, &mut rng);
        let nnf = to_nnf(&parse_formula(&text, &idx.signature()).unwrap()).unwrap();
        let ground = expand_quantifiers(&nnf, &idx).unwrap();
        let set = compile_min_affine(&ground).unwrap();
        for _ in 0..50 {
            let p = random_point(&mut rng, idx.len());
            let t = truth(&node, &p, 2, &mut Vec::new());
            prop_assert!((set.eval(&p) - t).abs() <= 1e-12);
            prop_assert!((ground.eval(&p) - t).abs() <= 1e-12);
        }
    }
}

#[test]
fn weak_disjunction_is_rejected_with_its_path() {
    let idx = index(2);
    let f = parse_formula("forall u: p1(u) & (p2(u) | p1(u))", &idx.signature()).unwrap();
    let err = compile_formula(&f, &idx, "f").unwrap_err().to_string();
    assert!(err.contains("weak disjunction") || err.contains('|'), "{err}");
}

#[test]
fn strong_conjunction_of_positives_is_rejected() {
    let idx = index(1);
    let f = parse_formula("p1(s1) * p2(s1)", &idx.signature()).unwrap();
    assert!(compile_formula(&f, &idx, "f").is_err());
}
