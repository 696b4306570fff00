//! The join of finitely many submeasures.
//!
//! `b(A) = inf { sum_m c_m(B_m) : A ⊆ ∪_m B_m }` is the largest submeasure
//! below each `c_m`. On a finite space with monotone `c_m` the infimum over
//! covers is attained by a partition (shrinking a cover to a partition never
//! increases any `c_m`), so the exact evaluator searches assignments of the
//! points of `A` to parts with branch-and-bound pruning.

use crate::space::{PointSet, ProductTreeSpace};
use crate::submeasure::SubmeasureHandle;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Exact-search budget: points of `A`.
pub const EXACT_MAX_POINTS: usize = 20;
/// Exact-search budget: number of submeasures.
pub const EXACT_MAX_PARTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JoinError {
    #[error("instance exceeds the exact budget (|A| <= {EXACT_MAX_POINTS}, n <= {EXACT_MAX_PARTS}); use the greedy evaluator")]
    UseGreedy,
    #[error("no submeasures given")]
    NoSubmeasures,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinMethod {
    Exact,
    Greedy,
}

/// Value plus the witness assignment of each point of `A` to one part.
#[derive(Debug, Clone)]
pub struct JoinResult {
    pub value: f64,
    /// `witness[m]` is the set of points assigned to submeasure `m`.
    pub witness_partition: Vec<PointSet>,
    pub method: JoinMethod,
}

fn part_sets(
    space: &ProductTreeSpace,
    points: &[usize],
    assignment: &[usize],
    parts: usize,
) -> Vec<PointSet> {
    let mut out = vec![space.empty_set(); parts];
    for (&point, &part) in points.iter().zip(assignment) {
        out[part].insert(point);
    }
    out
}

fn partition_cost(submeasures: &[&SubmeasureHandle], parts: &[PointSet]) -> f64 {
    submeasures
        .iter()
        .zip(parts)
        .map(|(c, part)| c.eval(part))
        .sum()
}

/// Exact minimum over partitions, by depth-first assignment with the
/// monotone lower bound `sum_m c_m(points assigned to m so far)`.
pub fn join_exact(
    submeasures: &[&SubmeasureHandle],
    space: &ProductTreeSpace,
    a: &PointSet,
) -> Result<JoinResult, JoinError> {
    if submeasures.is_empty() {
        return Err(JoinError::NoSubmeasures);
    }
    let points: Vec<usize> = a.iter().collect();
    if points.len() > EXACT_MAX_POINTS || submeasures.len() > EXACT_MAX_PARTS {
        return Err(JoinError::UseGreedy);
    }
    let n = submeasures.len();

    // incumbent: the best all-to-one-part assignment
    let mut best_assignment = vec![0usize; points.len()];
    let mut best = f64::INFINITY;
    for m in 0..n {
        let assignment = vec![m; points.len()];
        let cost = partition_cost(submeasures, &part_sets(space, &points, &assignment, n));
        if cost < best {
            best = cost;
            best_assignment = assignment;
        }
    }

    let mut assignment = vec![0usize; points.len()];
    let mut parts = vec![space.empty_set(); n];
    let mut part_costs: Vec<f64> = submeasures.iter().map(|c| c.eval(&space.empty_set())).collect();
    search(
        submeasures,
        &points,
        0,
        &mut assignment,
        &mut parts,
        &mut part_costs,
        &mut best,
        &mut best_assignment,
    );

    Ok(JoinResult {
        value: best,
        witness_partition: part_sets(space, &points, &best_assignment, n),
        method: JoinMethod::Exact,
    })
}

#[allow(clippy::too_many_arguments)]
fn search(
    submeasures: &[&SubmeasureHandle],
    points: &[usize],
    index: usize,
    assignment: &mut [usize],
    parts: &mut [PointSet],
    part_costs: &mut [f64],
    best: &mut f64,
    best_assignment: &mut [usize],
) {
    let bound: f64 = part_costs.iter().sum();
    if bound >= *best - 1e-15 {
        return;
    }
    if index == points.len() {
        *best = bound;
        best_assignment.copy_from_slice(assignment);
        return;
    }
    let point = points[index];
    for m in 0..submeasures.len() {
        parts[m].insert(point);
        let previous = part_costs[m];
        part_costs[m] = submeasures[m].eval(&parts[m]);
        assignment[index] = m;
        search(
            submeasures,
            points,
            index + 1,
            assignment,
            parts,
            part_costs,
            best,
            best_assignment,
        );
        part_costs[m] = previous;
        parts[m].remove(point);
    }
}

/// Local-search upper bound: random restarts followed by single-point
/// reassignment passes until no move improves. Deterministic given `seed`.
pub fn join_greedy(
    submeasures: &[&SubmeasureHandle],
    space: &ProductTreeSpace,
    a: &PointSet,
    restarts: usize,
    seed: u64,
) -> Result<JoinResult, JoinError> {
    if submeasures.is_empty() {
        return Err(JoinError::NoSubmeasures);
    }
    let points: Vec<usize> = a.iter().collect();
    let n = submeasures.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best_assignment = vec![0usize; points.len()];
    let mut best = f64::INFINITY;

    for restart in 0..restarts.max(1) {
        let mut assignment: Vec<usize> = if restart == 0 {
            vec![0; points.len()]
        } else {
            (0..points.len()).map(|_| rng.gen_range(0..n)).collect()
        };
        let mut parts = part_sets(space, &points, &assignment, n);
        let mut cost = partition_cost(submeasures, &parts);

        let mut order: Vec<usize> = (0..points.len()).collect();
        loop {
            let mut improved = false;
            order.shuffle(&mut rng);
            for &i in &order {
                let current = assignment[i];
                for m in 0..n {
                    if m == current {
                        continue;
                    }
                    parts[current].remove(points[i]);
                    parts[m].insert(points[i]);
                    let candidate = partition_cost(submeasures, &parts);
                    if candidate < cost - 1e-12 {
                        cost = candidate;
                        assignment[i] = m;
                        improved = true;
                        break;
                    }
                    parts[m].remove(points[i]);
                    parts[current].insert(points[i]);
                }
            }
            if !improved {
                break;
            }
        }
        if cost < best {
            best = cost;
            best_assignment = assignment;
        }
    }

    Ok(JoinResult {
        value: best,
        witness_partition: part_sets(space, &points, &best_assignment, n),
        method: JoinMethod::Greedy,
    })
}

/// A partition with `c_m(part_m) = 0` for every `m`, which exists exactly
/// when the join vanishes on `A`.
pub fn null_decompose(
    submeasures: &[&SubmeasureHandle],
    space: &ProductTreeSpace,
    a: &PointSet,
) -> Result<Option<Vec<PointSet>>, JoinError> {
    let result = join_exact(submeasures, space, a)?;
    if result.value.abs() <= 1e-12 {
        Ok(Some(result.witness_partition))
    } else {
        Ok(None)
    }
}

/// Verdict of the union bound `c(∪_i B_i ∪ B) - c(B) <= sum_i eps_i`.
#[derive(Debug, Clone)]
pub struct UnionBoundVerdict {
    pub lhs: f64,
    pub epsilon_sum: f64,
    pub passes: bool,
}

/// Checks the union bound for a submeasure `c` against instance data
/// `A_i ⊆ B_i ∩ B` with `c(B_i) - c(A_i) <= eps_i`. Instances violating the
/// preconditions are rejected as invalid input rather than failures.
pub fn union_bound_check(
    c: &SubmeasureHandle,
    b: &PointSet,
    pairs: &[(PointSet, PointSet)],
    epsilons: &[f64],
) -> Result<UnionBoundVerdict, JoinError> {
    if pairs.len() != epsilons.len() {
        return Err(JoinError::InvalidInstance(format!(
            "{} pairs but {} epsilons",
            pairs.len(),
            epsilons.len()
        )));
    }
    for (i, ((a_i, b_i), &eps)) in pairs.iter().zip(epsilons).enumerate() {
        if !a_i.is_subset_of(b_i) || !a_i.is_subset_of(b) {
            return Err(JoinError::InvalidInstance(format!(
                "pair {i}: A_{i} is not a subset of B_{i} ∩ B"
            )));
        }
        let gap = c.eval(b_i) - c.eval(a_i);
        if gap > eps + 1e-9 {
            return Err(JoinError::InvalidInstance(format!(
                "pair {i}: c(B_{i}) - c(A_{i}) = {gap} exceeds epsilon {eps}"
            )));
        }
    }
    let mut union = b.clone();
    for (_, b_i) in pairs {
        union = union.union(b_i);
    }
    let lhs = c.eval(&union) - c.eval(b);
    let epsilon_sum: f64 = epsilons.iter().sum();
    Ok(UnionBoundVerdict {
        lhs,
        epsilon_sum,
        passes: lhs <= epsilon_sum + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{DerivedCapacity, GoodNorm, NormTower};

    fn two_point_masses() -> (ProductTreeSpace, SubmeasureHandle, SubmeasureHandle) {
        let space = ProductTreeSpace::new(vec![2]).unwrap();
        let c0 = SubmeasureHandle::point_mass("at0", 0);
        let c1 = SubmeasureHandle::point_mass("at1", 1);
        (space, c0, c1)
    }

    #[test]
    fn join_of_point_masses_vanishes_with_witness() {
        let (space, c0, c1) = two_point_masses();
        let a = space.full_set();
        let result = join_exact(&[&c0, &c1], &space, &a).unwrap();
        assert_eq!(result.value, 0.0);
        // part for c0 must avoid 0 and part for c1 must avoid 1
        assert!(!result.witness_partition[0].contains(0));
        assert!(!result.witness_partition[1].contains(1));
        let union = result.witness_partition[0].union(&result.witness_partition[1]);
        assert_eq!(union, a);
    }

    #[test]
    fn join_of_single_submeasure_is_identity() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        for mask in 0..16u64 {
            let a = space.set_from_mask(mask);
            let r = join_exact(&[&u], &space, &a).unwrap();
            assert_eq!(r.value, u.eval(&a));
        }
    }

    #[test]
    fn join_of_empty_set_is_zero() {
        let (space, c0, c1) = two_point_masses();
        let r = join_exact(&[&c0, &c1], &space, &space.empty_set()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(join_greedy(&[&c0, &c1], &space, &space.empty_set(), 3, 1)
            .unwrap()
            .value
            .abs()
            < 1e-15);
    }

    #[test]
    fn exact_budget_guard() {
        let space = ProductTreeSpace::new(vec![21]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let a = space.full_set();
        assert!(matches!(
            join_exact(&[&u], &space, &a),
            Err(JoinError::UseGreedy)
        ));
    }

    #[test]
    fn join_invariants_exhaustive_on_small_space() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let pm = SubmeasureHandle::point_mass("pm0", 0);
        let max_cap = SubmeasureHandle::from_capacity(
            "max",
            DerivedCapacity::new(
                NormTower::new(
                    space.clone(),
                    vec![
                        GoodNorm::max(2),
                        GoodNorm::weighted_p(vec![0.5, 0.5], 1.0).unwrap(),
                    ],
                )
                .unwrap(),
            ),
        );
        let handles = [&u, &pm, &max_cap];
        let n = space.leaf_count();
        let b_table: Vec<f64> = (0..(1u64 << n))
            .map(|m| {
                join_exact(&handles, &space, &space.set_from_mask(m))
                    .unwrap()
                    .value
            })
            .collect();

        for mask in 0..(1u64 << n) {
            let set = space.set_from_mask(mask);
            let b = b_table[mask as usize];
            // b <= min_m c_m
            for h in &handles {
                assert!(b <= h.eval(&set) + 1e-12);
            }
            // b(A) = 0 iff null_decompose succeeds
            let decomposition = null_decompose(&handles, &space, &set).unwrap();
            assert_eq!(b.abs() <= 1e-12, decomposition.is_some(), "mask {mask}");
            if let Some(parts) = decomposition {
                for (h, part) in handles.iter().zip(&parts) {
                    assert!(h.eval(part).abs() <= 1e-12);
                }
            }
        }
        // monotone and subadditive over all pairs
        for a in 0..(1u64 << n) {
            for b in 0..(1u64 << n) {
                if a & b == a {
                    assert!(b_table[a as usize] <= b_table[b as usize] + 1e-12);
                }
                assert!(
                    b_table[(a | b) as usize]
                        <= b_table[a as usize] + b_table[b as usize] + 1e-9
                );
            }
        }
    }

    #[test]
    fn join_is_invariant_under_permutation() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let pm = SubmeasureHandle::point_mass("pm0", 0);
        for mask in 0..16u64 {
            let set = space.set_from_mask(mask);
            let ab = join_exact(&[&u, &pm], &space, &set).unwrap().value;
            let ba = join_exact(&[&pm, &u], &space, &set).unwrap().value;
            assert!((ab - ba).abs() < 1e-15);
        }
    }

    #[test]
    fn covers_never_beat_partitions_on_tiny_instances() {
        // brute force over all covers (each point to any nonempty set of
        // parts) agrees with the partition optimum
        let space = ProductTreeSpace::new(vec![4]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let pm = SubmeasureHandle::point_mass("pm2", 2);
        let handles = [&u, &pm];
        for mask in 0..16u64 {
            let set = space.set_from_mask(mask);
            let exact = join_exact(&handles, &space, &set).unwrap().value;
            let points: Vec<usize> = set.iter().collect();
            let mut best_cover = f64::INFINITY;
            let choices = 3usize; // nonempty subsets of 2 parts: {0}, {1}, {0,1}
            for code in 0..choices.pow(points.len() as u32) {
                let mut parts = vec![space.empty_set(); 2];
                let mut c = code;
                for &p in &points {
                    let choice = c % choices;
                    c /= choices;
                    if choice == 0 || choice == 2 {
                        parts[0].insert(p);
                    }
                    if choice == 1 || choice == 2 {
                        parts[1].insert(p);
                    }
                }
                let cost: f64 = handles.iter().zip(&parts).map(|(h, s)| h.eval(s)).sum();
                best_cover = best_cover.min(cost);
            }
            if points.is_empty() {
                best_cover = 0.0;
            }
            assert!((exact - best_cover).abs() < 1e-12, "mask {mask}");
        }
    }

    #[test]
    fn greedy_upper_bounds_exact_and_usually_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let space = ProductTreeSpace::new(vec![2, 2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let pm = SubmeasureHandle::point_mass("pm3", 3);
        let max_cap = SubmeasureHandle::from_capacity(
            "m",
            DerivedCapacity::new(
                NormTower::new(
                    space.clone(),
                    vec![
                        GoodNorm::max(2),
                        GoodNorm::weighted_p(vec![0.5, 0.5], 1.0).unwrap(),
                        GoodNorm::max(2),
                    ],
                )
                .unwrap(),
            ),
        );
        let handles = [&u, &pm, &max_cap];
        let mut equal = 0usize;
        let trials = 100;
        for t in 0..trials {
            let mask = rng.gen_range(0..256u64);
            let set = space.set_from_mask(mask);
            let exact = join_exact(&handles, &space, &set).unwrap().value;
            let greedy = join_greedy(&handles, &space, &set, 5, t as u64).unwrap().value;
            assert!(greedy >= exact - 1e-12, "greedy below exact on mask {mask}");
            if (greedy - exact).abs() <= 1e-12 {
                equal += 1;
            }
        }
        assert!(
            equal * 10 >= trials * 9,
            "greedy matched exact on only {equal}/{trials} instances"
        );
    }

    #[test]
    fn null_decompose_cases() {
        let (space, c0, c1) = two_point_masses();
        // a point positive under every submeasure blocks decomposition
        let both = SubmeasureHandle::point_mass("at0b", 0);
        let a = space.set_from_mask(0b01);
        assert!(null_decompose(&[&c0, &both], &space, &a).unwrap().is_none());
        // empty set: empty partition
        let empty = null_decompose(&[&c0, &c1], &space, &space.empty_set()).unwrap();
        assert!(empty.unwrap().iter().all(PointSet::is_empty));
    }

    #[test]
    fn union_bound_trivial_and_measure_cases() {
        let space = ProductTreeSpace::new(vec![2, 2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let b = space.set_from_mask(0b0000_1111);
        // all B_i inside B: left side 0
        let pairs = vec![
            (space.set_from_mask(0b0000_0011), space.set_from_mask(0b0000_0011)),
            (space.set_from_mask(0b0000_0100), space.set_from_mask(0b0000_1100)),
        ];
        let eps = vec![0.0, 0.125];
        let verdict = union_bound_check(&u, &b, &pairs, &eps).unwrap();
        assert!(verdict.passes);
        assert!(verdict.lhs.abs() < 1e-15);
    }

    #[test]
    fn union_bound_rejects_invalid_instances() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        let b = space.set_from_mask(0b0011);
        // A_i not inside B
        let pairs = vec![(space.set_from_mask(0b0100), space.set_from_mask(0b0100))];
        assert!(matches!(
            union_bound_check(&u, &b, &pairs, &[1.0]),
            Err(JoinError::InvalidInstance(_))
        ));
        // epsilon too small for the declared gap
        let pairs = vec![(space.set_from_mask(0b0001), space.set_from_mask(0b1101))];
        assert!(matches!(
            union_bound_check(&u, &b, &pairs, &[0.1]),
            Err(JoinError::InvalidInstance(_))
        ));
    }

    #[test]
    fn union_bound_random_valid_instances_on_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let space = ProductTreeSpace::new(vec![2, 2, 2]).unwrap();
        let u = SubmeasureHandle::uniform("u", &space);
        for _ in 0..200 {
            let b = space.set_from_mask(rng.gen_range(0..256));
            let mut pairs = Vec::new();
            let mut eps = Vec::new();
            for _ in 0..rng.gen_range(1..4) {
                let b_i = space.set_from_mask(rng.gen_range(0..256));
                let a_i = b_i.intersection(&b);
                let gap = u.eval(&b_i) - u.eval(&a_i);
                pairs.push((a_i, b_i));
                eps.push(gap);
            }
            let verdict = union_bound_check(&u, &b, &pairs, &eps).unwrap();
            assert!(verdict.passes);
        }
    }
}
