//! Exact s-dimensional cover weights at scale delta on tree metrics.
//!
//! A cover is a family of basic open sets of diameter at most delta whose
//! union contains the target set; its weight is `sum diam^s`. On an
//! ultrametric tree every ball is a basic open set, so restricting covers to
//! basic opens loses nothing, and the minimum-weight cover is computed two
//! independent ways: a bottom-up tree DP, and a shortest-path scan over the
//! lexicographic leaf intervals that basic opens induce.

use crate::space::{NodePath, PointSet, ProductTreeSpace, TreeMetric};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HausdorffError {
    #[error("delta {delta} is below the leaf diameter {leaf_diam}; no admissible covers exist")]
    DeltaTooSmall { delta: f64, leaf_diam: f64 },
    #[error("delta sequence must be strictly decreasing")]
    DeltasNotDecreasing,
}

/// A family of basic opens with the scale and exponent it was built for.
#[derive(Debug, Clone)]
pub struct CoverFamily {
    pub opens: Vec<NodePath>,
    pub s: f64,
    pub max_diam: f64,
}

/// `w(E) = sum over members of diam^s`.
pub fn weight(metric: &TreeMetric, family: &CoverFamily) -> f64 {
    family
        .opens
        .iter()
        .map(|t| metric.base().powi(t.len() as i32).powf(family.s))
        .sum()
}

#[derive(Debug, Clone)]
pub struct PremeasureResult {
    pub value: f64,
    pub optimal_cover: CoverFamily,
}

/// Minimum-weight cover of `A` by basic opens of diameter <= `delta`.
///
/// Bottom-up DP: `cost(t) = 0` if `O_t` misses `A`; otherwise the cheaper of
/// taking `O_t` itself (when admissible) and the sum over children. Ties
/// prefer the single node, so optimal covers are as coarse as possible.
pub fn min_weight_cover(
    space: &ProductTreeSpace,
    metric: &TreeMetric,
    a: &PointSet,
    s: f64,
    delta: f64,
) -> Result<PremeasureResult, HausdorffError> {
    assert!(s > 0.0, "exponent s must be positive");
    let leaf_diam = metric.base().powi(space.depth() as i32);
    if delta < leaf_diam {
        return Err(HausdorffError::DeltaTooSmall { delta, leaf_diam });
    }
    let mut opens = Vec::new();
    let value = dp(space, metric, a, s, delta, &mut NodePath::root(), &mut opens);
    Ok(PremeasureResult {
        value,
        optimal_cover: CoverFamily {
            opens,
            s,
            max_diam: delta,
        },
    })
}

fn dp(
    space: &ProductTreeSpace,
    metric: &TreeMetric,
    a: &PointSet,
    s: f64,
    delta: f64,
    t: &mut NodePath,
    opens: &mut Vec<NodePath>,
) -> f64 {
    let (lo, hi) = space.leaf_range(t).expect("path built in range");
    if !(lo..hi).any(|i| a.contains(i)) {
        return 0.0;
    }
    let diam = metric.base().powi(t.len() as i32);
    let own = if diam <= delta + 1e-15 {
        Some(diam.powf(s))
    } else {
        None
    };
    if t.len() == space.depth() {
        // leaf: admissible by the delta >= leaf_diam guard
        opens.push(t.clone());
        return own.expect("leaf diameter is within delta");
    }
    let mark = opens.len();
    let mut children_cost = 0.0;
    for c in 0..space.arities()[t.len()] {
        t.push(c as u32);
        children_cost += dp(space, metric, a, s, delta, t, opens);
        t.pop();
    }
    match own {
        Some(own_cost) if own_cost <= children_cost + 1e-15 => {
            opens.truncate(mark);
            opens.push(t.clone());
            own_cost
        }
        _ => children_cost,
    }
}

/// Independent evaluation of the same minimum via interval covering.
///
/// Basic opens are contiguous lexicographic leaf ranges, so a cover of `A`
/// is a set of admissible intervals whose union contains the positions of
/// `A`. Scanning the points of `A` left to right and choosing, for each
/// still-uncovered point, an admissible interval through it is a DAG
/// shortest path over `|A| + 1` states.
pub fn min_weight_cover_by_intervals(
    space: &ProductTreeSpace,
    metric: &TreeMetric,
    a: &PointSet,
    s: f64,
    delta: f64,
) -> Result<f64, HausdorffError> {
    assert!(s > 0.0, "exponent s must be positive");
    let leaf_diam = metric.base().powi(space.depth() as i32);
    if delta < leaf_diam {
        return Err(HausdorffError::DeltaTooSmall { delta, leaf_diam });
    }
    let points: Vec<usize> = a.iter().collect();
    if points.is_empty() {
        return Ok(0.0);
    }
    // admissible intervals: (lo, hi, weight) for every node with diam <= delta
    let mut intervals: Vec<(usize, usize, f64)> = Vec::new();
    collect_intervals(space, metric, s, delta, &mut NodePath::root(), &mut intervals);

    let inf = f64::INFINITY;
    let mut cost = vec![inf; points.len() + 1];
    cost[points.len()] = 0.0;
    for i in (0..points.len()).rev() {
        let p = points[i];
        for &(lo, hi, w) in &intervals {
            if lo <= p && p < hi {
                // first uncovered point after taking this interval
                let next = points.partition_point(|&q| q < hi);
                let candidate = w + cost[next];
                if candidate < cost[i] {
                    cost[i] = candidate;
                }
            }
        }
    }
    Ok(cost[0])
}

fn collect_intervals(
    space: &ProductTreeSpace,
    metric: &TreeMetric,
    s: f64,
    delta: f64,
    t: &mut NodePath,
    out: &mut Vec<(usize, usize, f64)>,
) {
    let diam = metric.base().powi(t.len() as i32);
    if diam <= delta + 1e-15 {
        let (lo, hi) = space.leaf_range(t).expect("path built in range");
        out.push((lo, hi, diam.powf(s)));
    }
    if t.len() < space.depth() {
        for c in 0..space.arities()[t.len()] {
            t.push(c as u32);
            collect_intervals(space, metric, s, delta, t, out);
            t.pop();
        }
    }
}

/// Minimum-weight covers along a strictly decreasing delta sequence.
pub fn premeasure_profile(
    space: &ProductTreeSpace,
    metric: &TreeMetric,
    a: &PointSet,
    s: f64,
    deltas: &[f64],
) -> Result<Vec<PremeasureResult>, HausdorffError> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HausdorffError::DeltasNotDecreasing);
    }
    deltas
        .iter()
        .map(|&delta| min_weight_cover(space, metric, a, s, delta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_space(depth: usize) -> ProductTreeSpace {
        ProductTreeSpace::new(vec![2; depth]).unwrap()
    }

    #[test]
    fn weight_examples() {
        let m = TreeMetric::default();
        let root = CoverFamily {
            opens: vec![NodePath::root()],
            s: 3.7,
            max_diam: 1.0,
        };
        assert_eq!(weight(&m, &root), 1.0);
        let two_halves = CoverFamily {
            opens: vec![NodePath::new(vec![0]), NodePath::new(vec![1])],
            s: 1.0,
            max_diam: 0.5,
        };
        assert!((weight(&m, &two_halves) - 1.0).abs() < 1e-15);
        let four_quarters = CoverFamily {
            opens: (0..4)
                .map(|i| NodePath::new(vec![i / 2, i % 2]))
                .collect(),
            s: 2.0,
            max_diam: 0.25,
        };
        assert!((weight(&m, &four_quarters) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singleton_cover_closed_form() {
        for depth in 1..=6 {
            let space = binary_space(depth);
            let metric = TreeMetric::default();
            let mut a = space.empty_set();
            a.insert(0);
            let s = 1.3;
            // delta below every internal diameter: only leaves qualify
            let delta = 0.5f64.powi(depth as i32);
            let result = min_weight_cover(&space, &metric, &a, s, delta).unwrap();
            let expected = 0.5f64.powi(depth as i32).powf(s);
            assert!((result.value - expected).abs() < 1e-12, "depth {depth}");
            assert_eq!(result.optimal_cover.opens.len(), 1);
        }
    }

    #[test]
    fn full_binary_space_closed_form() {
        // s > 1 at delta = 1: per-level cost 2^{(1-s)j} is minimized by leaves
        for depth in 1..=6 {
            let space = binary_space(depth);
            let metric = TreeMetric::default();
            let a = space.full_set();
            for s in [1.5, 2.0, 3.0] {
                let result = min_weight_cover(&space, &metric, &a, s, 1.0).unwrap();
                let expected = 2f64.powf((1.0 - s) * depth as f64);
                assert!(
                    (result.value - expected).abs() < 1e-12,
                    "depth {depth} s {s}"
                );
            }
            // s < 1: the root alone is optimal
            let result = min_weight_cover(&space, &metric, &a, 0.5, 1.0).unwrap();
            assert!((result.value - 1.0).abs() < 1e-15);
            assert_eq!(result.optimal_cover.opens, vec![NodePath::root()]);
        }
    }

    #[test]
    fn empty_set_costs_nothing() {
        let space = binary_space(3);
        let metric = TreeMetric::default();
        let r = min_weight_cover(&space, &metric, &space.empty_set(), 2.0, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.optimal_cover.opens.is_empty());
    }

    #[test]
    fn delta_below_leaf_diameter_is_rejected() {
        let space = binary_space(2);
        let metric = TreeMetric::default();
        assert!(matches!(
            min_weight_cover(&space, &metric, &space.full_set(), 1.0, 0.2),
            Err(HausdorffError::DeltaTooSmall { .. })
        ));
    }

    #[test]
    fn optimal_cover_is_a_cover_with_matching_weight() {
        let space = ProductTreeSpace::new(vec![2, 3, 2]).unwrap();
        let metric = TreeMetric::parse("1/2").unwrap();
        for mask in [0b0110_1001_0110u64, 0b1111_0000_1111, 0b0000_0000_0001] {
            let a = space.set_from_mask(mask);
            for delta in [1.0, 0.5, 0.25, 0.125] {
                let r = min_weight_cover(&space, &metric, &a, 1.7, delta).unwrap();
                let rebuilt = space.set_from_paths(r.optimal_cover.opens.iter()).unwrap();
                assert!(a.is_subset_of(&rebuilt));
                for t in &r.optimal_cover.opens {
                    assert!(metric.diameter(&space, t).unwrap() <= delta + 1e-15);
                }
                assert!((weight(&metric, &r.optimal_cover) - r.value).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dp_matches_interval_route_exhaustively() {
        // dyadic parameters make both routes exact, so equality is literal
        let spaces = [
            ProductTreeSpace::new(vec![2, 2]).unwrap(),
            ProductTreeSpace::new(vec![3, 2]).unwrap(),
            ProductTreeSpace::new(vec![2, 2, 2]).unwrap(),
        ];
        let metric = TreeMetric::default();
        for space in &spaces {
            let n = space.leaf_count();
            for mask in 0..(1u64 << n) {
                let a = space.set_from_mask(mask);
                for s in [1.0, 2.0] {
                    for delta in [1.0, 0.5, 0.25] {
                        let dp = min_weight_cover(space, &metric, &a, s, delta)
                            .unwrap()
                            .value;
                        let intervals =
                            min_weight_cover_by_intervals(space, &metric, &a, s, delta).unwrap();
                        assert_eq!(dp, intervals, "mask {mask} s {s} delta {delta}");
                    }
                }
            }
        }
    }

    #[test]
    fn dp_matches_interval_route_at_fractional_exponent() {
        let space = ProductTreeSpace::new(vec![2, 2, 2]).unwrap();
        let metric = TreeMetric::parse("1/3").unwrap();
        for mask in (0..256u64).step_by(7) {
            let a = space.set_from_mask(mask);
            let dp = min_weight_cover(&space, &metric, &a, 1.37, 0.4).unwrap().value;
            let iv = min_weight_cover_by_intervals(&space, &metric, &a, 1.37, 0.4).unwrap();
            assert!((dp - iv).abs() <= 1e-12);
        }
    }

    #[test]
    fn profile_is_nondecreasing_as_delta_shrinks() {
        let space = binary_space(4);
        let metric = TreeMetric::default();
        let a = space.set_from_mask(0b1010_1100_0011_0101);
        let deltas = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let profile = premeasure_profile(&space, &metric, &a, 1.4, &deltas).unwrap();
        for w in profile.windows(2) {
            assert!(w[1].value >= w[0].value - 1e-15);
        }
        // empty set: all zeros
        let zero = premeasure_profile(&space, &metric, &space.empty_set(), 1.4, &deltas).unwrap();
        assert!(zero.iter().all(|r| r.value == 0.0));
        // singleton: constant leaf weight once delta forces leaves
        let mut single = space.empty_set();
        single.insert(5);
        let sp = premeasure_profile(&space, &metric, &single, 2.0, &[0.125, 0.0625]).unwrap();
        assert!((sp[1].value - 0.0625f64.powf(2.0)).abs() < 1e-15);
    }

    #[test]
    fn profile_rejects_non_decreasing_deltas() {
        let space = binary_space(2);
        let metric = TreeMetric::default();
        assert!(matches!(
            premeasure_profile(&space, &metric, &space.full_set(), 1.0, &[0.5, 0.5]),
            Err(HausdorffError::DeltasNotDecreasing)
        ));
    }

    #[test]
    fn monotone_and_subadditive_exhaustive_small() {
        let space = binary_space(3);
        let metric = TreeMetric::default();
        let s = 1.2;
        let delta = 0.5;
        let values: Vec<f64> = (0..256u64)
            .map(|m| {
                min_weight_cover(&space, &metric, &space.set_from_mask(m), s, delta)
                    .unwrap()
                    .value
            })
            .collect();
        for a in 0..256u64 {
            for b in 0..256u64 {
                if a & b == a {
                    assert!(values[a as usize] <= values[b as usize] + 1e-12);
                }
                assert!(
                    values[(a | b) as usize] <= values[a as usize] + values[b as usize] + 1e-12
                );
            }
        }
    }

    #[test]
    fn premeasure_nonincreasing_in_exponent() {
        let space = binary_space(3);
        let metric = TreeMetric::default();
        for mask in (0..256u64).step_by(11) {
            let a = space.set_from_mask(mask);
            let mut last = f64::INFINITY;
            for s in [0.5, 1.0, 1.5, 2.5] {
                let v = min_weight_cover(&space, &metric, &a, s, 0.5).unwrap().value;
                assert!(v <= last + 1e-12);
                last = v;
            }
        }
    }
}
