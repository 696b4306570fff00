//! Cross-module property tests.

use capacitylab::hausdorff;
use capacitylab::join;
use capacitylab::norms::{DerivedCapacity, GoodNorm, NormTower};
use capacitylab::space::{ProductTreeSpace, TreeMetric};
use capacitylab::submeasure::SubmeasureHandle;
use proptest::prelude::*;

fn arb_space() -> impl Strategy<Value = ProductTreeSpace> {
    prop::collection::vec(1usize..4, 1..4)
        .prop_filter("at least two leaves", |arities| {
            arities.iter().product::<usize>() >= 2
        })
        .prop_map(|arities| ProductTreeSpace::new(arities).unwrap())
}

fn arb_tower(space: ProductTreeSpace) -> impl Strategy<Value = DerivedCapacity> {
    let arities = space.arities().to_vec();
    let levels: Vec<_> = arities
        .iter()
        .map(|&k| {
            prop_oneof![
                Just(GoodNorm::max(k)),
                (prop::collection::vec(0.05f64..1.0, k), 0usize..4).prop_map(
                    move |(raw, p_index)| {
                        let sum: f64 = raw.iter().sum();
                        let weights = raw.into_iter().map(|w| w / sum).collect();
                        GoodNorm::weighted_p(weights, [1.0, 1.5, 2.0, 3.0][p_index]).unwrap()
                    }
                ),
            ]
        })
        .collect();
    levels.prop_map(move |levels| {
        DerivedCapacity::new(NormTower::new(space.clone(), levels).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_round_trips_and_is_an_antichain(
        (space, mask) in arb_space().prop_flat_map(|s| {
            let leaves = s.leaf_count();
            (Just(s), 0u64..(1u64 << leaves))
        })
    ) {
        let set = space.set_from_mask(mask);
        let parts = space.canonical_decomposition(&set);
        for (i, p) in parts.iter().enumerate() {
            for (j, q) in parts.iter().enumerate() {
                prop_assert!(i == j || !p.is_prefix_of(q));
            }
        }
        prop_assert_eq!(space.set_from_paths(parts.iter()).unwrap(), set);
    }

    #[test]
    fn tower_capacity_is_monotone_and_subadditive(
        (cap, a, b) in arb_space().prop_flat_map(|s| {
            let leaves = s.leaf_count();
            (arb_tower(s), 0u64..(1u64 << leaves), 0u64..(1u64 << leaves))
        })
    ) {
        let space = cap.space().clone();
        let sa = space.set_from_mask(a);
        let sb = space.set_from_mask(b);
        let c_union = cap.eval(&sa.union(&sb));
        let c_inter = cap.eval(&sa.intersection(&sb));
        prop_assert!(c_inter <= cap.eval(&sa) + 1e-12);
        prop_assert!(c_union <= cap.eval(&sa) + cap.eval(&sb) + 1e-12);
        // re-expressing the indicator one level deeper never changes the value
        let f: Vec<f64> = (0..space.leaf_count())
            .map(|i| if sa.contains(i) { 1.0 } else { 0.0 })
            .collect();
        let direct = cap.tower().eval_leaf_function(&f).unwrap();
        prop_assert!((direct - cap.eval(&sa)).abs() < 1e-12);
    }

    #[test]
    fn cover_weight_is_monotone_in_the_set(
        (space, mask, sub) in arb_space().prop_flat_map(|s| {
            let leaves = s.leaf_count();
            (Just(s), 0u64..(1u64 << leaves), 0u64..(1u64 << leaves))
        }),
        s_exp in 0.5f64..3.0,
    ) {
        let metric = TreeMetric::default();
        let small = space.set_from_mask(mask & sub);
        let big = space.set_from_mask(mask);
        let delta = 0.5f64.powi(space.depth() as i32);
        let v_small = hausdorff::min_weight_cover(&space, &metric, &small, s_exp, delta)
            .unwrap()
            .value;
        let v_big = hausdorff::min_weight_cover(&space, &metric, &big, s_exp, delta)
            .unwrap()
            .value;
        prop_assert!(v_small <= v_big + 1e-12);
    }

    #[test]
    fn join_never_exceeds_any_member(
        (space, mask, leaf) in arb_space().prop_flat_map(|s| {
            let leaves = s.leaf_count();
            (Just(s), 0u64..(1u64 << leaves), 0usize..2)
        })
    ) {
        let uniform = SubmeasureHandle::uniform("u", &space);
        let pm = SubmeasureHandle::point_mass("pm", leaf.min(space.leaf_count() - 1));
        let set = space.set_from_mask(mask);
        let b = join::join_exact(&[&uniform, &pm], &space, &set).unwrap().value;
        prop_assert!(b <= uniform.eval(&set) + 1e-12);
        prop_assert!(b <= pm.eval(&set) + 1e-12);
    }
}
