use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treealgebra::combine::{affine_combination, combine_many, combine_pair, simplify, CombineBudget};
use treealgebra::oracle::{pointwise_equivalence, random_schema, random_tree, FuzzConfig, LeafSpec};

fn fuzz_pair(seed: u64, max_nodes: usize, hyperplanes: bool) -> (treealgebra::tree::Tree, treealgebra::tree::Tree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_num = rng.gen_range(1..=5);
    let n_cat = rng.gen_range(0..=3);
    let schema = random_schema(&mut rng, n_num, n_cat, None);
    let config = FuzzConfig {
        max_nodes,
        max_depth: 16,
        leaves: LeafSpec::Scalar,
        value_levels: if rng.gen_bool(0.5) { Some(3) } else { None },
        threshold_grid: if rng.gen_bool(0.5) {
            Some(rng.gen_range(2..=6))
        } else {
            None
        },
        hyperplane_probability: if hyperplanes { 0.3 } else { 0.0 },
    };
    let a = random_tree(&schema, &config, &mut rng).unwrap();
    let b = random_tree(&schema, &config, &mut rng).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_pointwise_pair(seed in any::<u64>()) {
        let (a, b) = fuzz_pair(seed, 121, false);
        let mut budget = CombineBudget::default().with_containment_checks();
        let c = combine_pair(&a, &b, &mut budget).unwrap();
        prop_assert!(pointwise_equivalence(&c, &[&a, &b], 2000, seed).unwrap().is_pass());
        prop_assert!(budget.calls_made() <= a.len() * b.len());
        prop_assert!(c.leaf_count() <= a.leaf_count() * b.leaf_count());
        prop_assert!(c.validate().is_ok());
    }

    #[test]
    fn product_with_hyperplanes(seed in any::<u64>()) {
        let (a, b) = fuzz_pair(seed, 31, true);
        let mut budget = CombineBudget::default();
        let c = combine_pair(&a, &b, &mut budget).unwrap();
        prop_assert!(pointwise_equivalence(&c, &[&a, &b], 2000, seed).unwrap().is_pass());
        prop_assert!(budget.calls_made() <= a.len() * b.len());
        prop_assert!(c.validate().is_ok());
    }

    #[test]
    fn fold_is_associative_pointwise(seed in any::<u64>()) {
        let (a, b) = fuzz_pair(seed, 41, false);
        let (c, _) = fuzz_pair(seed, 41, false);
        let mut budget = CombineBudget::default();
        let left = combine_many(&[a.clone(), b.clone(), c.clone()], &mut budget).unwrap();
        let bc = combine_pair(&b, &c, &mut budget).unwrap();
        let right = combine_pair(&a, &bc, &mut budget).unwrap();
        prop_assert!(pointwise_equivalence(&left, &[&a, &b, &c], 1000, seed).unwrap().is_pass());
        prop_assert!(pointwise_equivalence(&right, &[&a, &b, &c], 1000, seed).unwrap().is_pass());
    }

    #[test]
    fn simplify_preserves_function(seed in any::<u64>(), w in -2.0f64..2.0) {
        let (a, b) = fuzz_pair(seed, 41, false);
        let mut budget = CombineBudget::default();
        let t = affine_combination(&[a, b], &[w, 1.0], &mut budget).unwrap();
        let s = simplify(&t);
        prop_assert!(s.validate().is_ok());
        prop_assert!(s.len() <= t.len());
        prop_assert!(pointwise_equivalence(&s, &[&t], 1000, seed).unwrap().is_pass());
    }
}
