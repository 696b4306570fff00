//! Finite truncation of the covering game `H(B, eps)`.
//!
//! Player I grows a set `A` of capacity at most `eps`; Player II commits one
//! coordinate per round and wins if the resulting leaf lands in `B \ A`.
//! Each round Player I extends first, then Player II fixes the next
//! coordinate, so `A` is committed before the leaf is known.
//!
//! After round 0 Player I's extensions must preserve the capacity of `A`
//! (`c(A') = c(A)` up to tolerance). This is the finite shadow of the
//! original pacing schedule, where late additions are capacity-free in the
//! limit: without it Player I could wait for Player II's prefix and then
//! cover the reachable part of `B` wholesale, winning games with
//! `c(B) > eps` and breaking the correspondence between winners and
//! capacity.
//!
//! The correspondence is a statement about *stable* capacities, and the
//! finite counterpart of stability matters here too. Say a capacity has
//! stable flat closures when, for every set `A`, the union of everything
//! reachable from `A` by capacity-preserving additions still has capacity
//! `c(A)`. Under that hypothesis a Player I win forces `c(B) <= eps`
//! (every line's final cover sits inside the flat closure of the opening
//! set). Without it the implication genuinely fails: with `max` above and
//! below a weighted level, Player I can hold a reservoir in one branch and
//! cover either cell of another branch for free -- but not both -- deferring
//! the choice until Player II commits a coordinate. The verifier therefore
//! checks the hypothesis exhaustively first and downgrades the second
//! implication to an observation where it fails; `c(B) < eps` implying a
//! Player I win needs no hypothesis (cover `B` at round 0).

use crate::space::{PointSet, ProductTreeSpace};
use crate::submeasure::SubmeasureHandle;
use std::collections::{BTreeMap, HashMap, HashSet};
use thiserror::Error;

/// State-space guard for a single solve.
pub const SOLVE_MAX_LEAVES: usize = 12;
/// Guard for the exhaustive correspondence verifier (all subsets, all epsilons).
pub const LEMMA_MAX_LEAVES: usize = 8;

const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("space has {leaves} leaves, exceeding the {max} guard")]
    TooLarge { leaves: usize, max: usize },
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    PlayerOne,
    PlayerTwo,
}

/// A game instance: space, capacity, target set and budget.
pub struct TruncatedGame<'a> {
    pub space: &'a ProductTreeSpace,
    pub capacity: &'a SubmeasureHandle,
    pub target: PointSet,
    pub epsilon: f64,
}

/// Position identifier inside a solved game.
///
/// For a Player I strategy the key addresses the position *before* Player
/// I's extension in `round`; for a Player II strategy it addresses the
/// position *after* Player I extended to `cover_mask`, with Player II to
/// fix the coordinate of `round`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PositionKey {
    pub round: u8,
    pub prefix_start: u32,
    pub cover_mask: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyMove {
    Extend(u64),
    Coordinate(u32),
}

#[derive(Debug, Clone)]
pub struct Strategy {
    pub winner: Winner,
    pub moves: BTreeMap<PositionKey, StrategyMove>,
}

#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub winner: Winner,
    pub strategy: Strategy,
    pub positions_explored: usize,
    /// Least capacity of a winning opening set for Player I, independent of
    /// epsilon; Player I wins exactly when this is at most epsilon.
    pub min_winning_capacity: f64,
}

struct Solver {
    arities: Vec<usize>,
    strides: Vec<usize>,
    leaves: usize,
    ctable: Vec<f64>,
    target: u64,
    memo: HashMap<u64, bool>,
}

impl Solver {
    fn new(space: &ProductTreeSpace, capacity: &SubmeasureHandle, target: u64) -> Self {
        let leaves = space.leaf_count();
        let ctable: Vec<f64> = (0..(1u64 << leaves))
            .map(|m| capacity.eval(&space.set_from_mask(m)))
            .collect();
        let d = space.depth();
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * space.arities()[i + 1];
        }
        Solver {
            arities: space.arities().to_vec(),
            strides,
            leaves,
            ctable,
            target,
            memo: HashMap::new(),
        }
    }

    fn depth(&self) -> usize {
        self.arities.len()
    }

    fn key(round: usize, lo: usize, a: u64) -> u64 {
        (round as u64) << 40 | (lo as u64) << 20 | a
    }

    /// Value of the position where Player II has fixed `round` coordinates
    /// (prefix leaf range starting at `lo`) and Player I holds cover `a`.
    /// True when Player I wins with best play.
    fn player_one_wins(&mut self, round: usize, lo: usize, a: u64) -> bool {
        if round == self.depth() {
            let leaf = lo as u64;
            return !(self.target >> leaf & 1 == 1 && a >> leaf & 1 == 0);
        }
        let key = Self::key(round, lo, a);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let budget = self.ctable[a as usize] + TOL;
        let full = (1u64 << self.leaves) - 1;
        let mut result = false;
        // enumerate supersets of a in increasing mask order
        let mut sup = a;
        loop {
            if self.ctable[sup as usize] <= budget && self.all_coords_win(round, lo, sup) {
                result = true;
                break;
            }
            if sup == full {
                break;
            }
            sup = (sup + 1) | a;
        }
        self.memo.insert(key, result);
        result
    }

    fn all_coords_win(&mut self, round: usize, lo: usize, a: u64) -> bool {
        (0..self.arities[round])
            .all(|c| self.player_one_wins(round + 1, lo + c * self.strides[round], a))
    }

    /// Least capacity over opening sets from which Player I wins.
    fn min_winning_capacity(&mut self) -> (f64, u64) {
        let full = (1u64 << self.leaves) - 1;
        let mut best = f64::INFINITY;
        let mut best_mask = full;
        for a0 in 0..=full {
            if self.all_coords_win_at_root(a0) {
                let c = self.ctable[a0 as usize];
                if c < best - 1e-15 {
                    best = c;
                    best_mask = a0;
                }
            }
        }
        (best, best_mask)
    }

    fn all_coords_win_at_root(&mut self, a0: u64) -> bool {
        if self.depth() == 0 {
            return true;
        }
        self.all_coords_win(0, 0, a0)
    }

    /// Player I's winning extension at a non-root position: keep `a` when it
    /// already wins, otherwise the first capacity-preserving superset that
    /// does.
    fn winning_extension(&mut self, round: usize, lo: usize, a: u64) -> Option<u64> {
        let budget = self.ctable[a as usize] + TOL;
        let full = (1u64 << self.leaves) - 1;
        let mut sup = a;
        loop {
            if self.ctable[sup as usize] <= budget && self.all_coords_win(round, lo, sup) {
                return Some(sup);
            }
            if sup == full {
                break;
            }
            sup = (sup + 1) | a;
        }
        None
    }
}

/// Solves the truncated game exactly.
pub fn solve_minimax(game: &TruncatedGame<'_>) -> Result<GameOutcome, GameError> {
    let leaves = game.space.leaf_count();
    if leaves > SOLVE_MAX_LEAVES {
        return Err(GameError::TooLarge {
            leaves,
            max: SOLVE_MAX_LEAVES,
        });
    }
    if !(game.epsilon > 0.0) {
        return Err(GameError::BadEpsilon(game.epsilon));
    }
    let mut solver = Solver::new(game.space, game.capacity, game.target.as_mask());
    let (min_c, _) = solver.min_winning_capacity();
    let winner = if min_c <= game.epsilon + TOL {
        Winner::PlayerOne
    } else {
        Winner::PlayerTwo
    };
    let strategy = match winner {
        Winner::PlayerOne => extract_player_one_strategy(&mut solver, game.epsilon),
        Winner::PlayerTwo => extract_player_two_strategy(&mut solver, game.epsilon),
    };
    Ok(GameOutcome {
        winner,
        strategy,
        positions_explored: solver.memo.len(),
        min_winning_capacity: min_c,
    })
}

fn extract_player_one_strategy(solver: &mut Solver, epsilon: f64) -> Strategy {
    let mut moves = BTreeMap::new();
    // opening: the cheapest winning set within budget, ties to the smallest mask
    let full = (1u64 << solver.leaves) - 1;
    let mut opening = None;
    let mut best = f64::INFINITY;
    for a0 in 0..=full {
        let c = solver.ctable[a0 as usize];
        if c <= epsilon + TOL && c < best - 1e-15 && solver.all_coords_win_at_root(a0) {
            best = c;
            opening = Some(a0);
        }
    }
    let opening = opening.expect("player one wins, so a winning opening exists");
    moves.insert(
        PositionKey {
            round: 0,
            prefix_start: 0,
            cover_mask: 0,
        },
        StrategyMove::Extend(opening),
    );
    let mut stack = vec![(0usize, 0usize, opening)];
    let mut seen = HashSet::new();
    while let Some((round, lo, a)) = stack.pop() {
        if round == solver.depth() {
            continue;
        }
        for c in 0..solver.arities[round] {
            let next_lo = lo + c * solver.strides[round];
            let next_round = round + 1;
            if next_round == solver.depth() {
                continue;
            }
            if !seen.insert((next_round, next_lo, a)) {
                continue;
            }
            let extension = solver
                .winning_extension(next_round, next_lo, a)
                .expect("winning positions always have a winning extension");
            moves.insert(
                PositionKey {
                    round: next_round as u8,
                    prefix_start: next_lo as u32,
                    cover_mask: a,
                },
                StrategyMove::Extend(extension),
            );
            stack.push((next_round, next_lo, extension));
        }
    }
    Strategy {
        winner: Winner::PlayerOne,
        moves,
    }
}

fn extract_player_two_strategy(solver: &mut Solver, epsilon: f64) -> Strategy {
    let mut moves = BTreeMap::new();
    let mut seen = HashSet::new();
    let full = (1u64 << solver.leaves) - 1;
    // respond to every legal opening
    let mut frontier: Vec<(usize, usize, u64)> = Vec::new();
    for a0 in 0..=full {
        if solver.ctable[a0 as usize] <= epsilon + TOL {
            frontier.push((0, 0, a0));
        }
    }
    while let Some((round, lo, a)) = frontier.pop() {
        if !seen.insert((round, lo, a)) {
            continue;
        }
        // Player II to move at `round` with Player I holding `a`
        let coordinate = (0..solver.arities[round])
            .find(|&c| !solver.player_one_wins(round + 1, lo + c * solver.strides[round], a))
            .expect("player two wins here, so a refuting coordinate exists");
        moves.insert(
            PositionKey {
                round: round as u8,
                prefix_start: lo as u32,
                cover_mask: a,
            },
            StrategyMove::Coordinate(coordinate as u32),
        );
        let next_round = round + 1;
        let next_lo = lo + coordinate * solver.strides[round];
        if next_round == solver.depth() {
            continue;
        }
        // all capacity-preserving extensions Player I might try next
        let budget = solver.ctable[a as usize] + TOL;
        let mut sup = a;
        loop {
            if solver.ctable[sup as usize] <= budget {
                frontier.push((next_round, next_lo, sup));
            }
            if sup == full {
                break;
            }
            sup = (sup + 1) | a;
        }
    }
    Strategy {
        winner: Winner::PlayerTwo,
        moves,
    }
}

/// Replays a strategy against every legal counter-line; true when the
/// declared winner wins every play.
pub fn replay_strategy(game: &TruncatedGame<'_>, outcome: &GameOutcome) -> bool {
    let leaves = game.space.leaf_count();
    if leaves > SOLVE_MAX_LEAVES {
        return false;
    }
    let d = game.space.depth();
    let mut strides = vec![1usize; d];
    for i in (0..d - 1).rev() {
        strides[i] = strides[i + 1] * game.space.arities()[i + 1];
    }
    let ctable: Vec<f64> = (0..(1u64 << leaves))
        .map(|m| game.capacity.eval(&game.space.set_from_mask(m)))
        .collect();
    let target = game.target.as_mask();
    let full = (1u64 << leaves) - 1;

    // explicit stack of positions with Player I to move
    let mut stack = vec![(0usize, 0usize, 0u64)];
    let mut seen = HashSet::new();
    while let Some((round, lo, a)) = stack.pop() {
        if round == d {
            let leaf = lo as u64;
            let player_two_won = target >> leaf & 1 == 1 && a >> leaf & 1 == 0;
            let declared_two = outcome.winner == Winner::PlayerTwo;
            if player_two_won != declared_two {
                return false;
            }
            continue;
        }
        if !seen.insert((round, lo, a)) {
            continue;
        }
        let budget = if round == 0 {
            game.epsilon + TOL
        } else {
            ctable[a as usize] + TOL
        };
        match outcome.winner {
            Winner::PlayerOne => {
                // follow the recorded extension, branch on every coordinate
                let key = PositionKey {
                    round: round as u8,
                    prefix_start: lo as u32,
                    cover_mask: a,
                };
                let a_next = match outcome.strategy.moves.get(&key) {
                    Some(StrategyMove::Extend(m)) => *m,
                    _ => a, // no recorded move: stand pat
                };
                if a_next & a != a || ctable[a_next as usize] > budget {
                    return false; // illegal recorded move
                }
                for c in 0..game.space.arities()[round] {
                    stack.push((round + 1, lo + c * strides[round], a_next));
                }
            }
            Winner::PlayerTwo => {
                // branch on every legal extension, follow the recorded coordinate
                let mut sup = a;
                loop {
                    if ctable[sup as usize] <= budget {
                        let key = PositionKey {
                            round: round as u8,
                            prefix_start: lo as u32,
                            cover_mask: sup,
                        };
                        let c = match outcome.strategy.moves.get(&key) {
                            Some(StrategyMove::Coordinate(c)) => *c as usize,
                            _ => return false, // missing response
                        };
                        if c >= game.space.arities()[round] {
                            return false;
                        }
                        stack.push((round + 1, lo + c * strides[round], sup));
                    }
                    if sup == full {
                        break;
                    }
                    sup = (sup + 1) | a;
                }
            }
        }
    }
    true
}

/// Union of every set reachable from `a` by capacity-preserving additions.
///
/// Adding a set flatly is equivalent to adding its leaves one at a time
/// (capacities are monotone), so a breadth-first walk over single-leaf flat
/// additions visits every reachable cover.
fn flat_closure_union(ctable: &[f64], leaves: usize, a: u64) -> u64 {
    let mut visited = HashSet::new();
    let mut stack = vec![a];
    let mut union = a;
    while let Some(current) = stack.pop() {
        if !visited.insert(current) {
            continue;
        }
        union |= current;
        let budget = ctable[current as usize] + TOL;
        for leaf in 0..leaves {
            if current >> leaf & 1 == 0 {
                let next = current | 1 << leaf;
                if ctable[next as usize] <= budget {
                    stack.push(next);
                }
            }
        }
    }
    union
}

/// Exhaustively checks the finite stability hypothesis of the game
/// correspondence: every set's flat closure has the same capacity.
pub fn flat_closures_stable(space: &ProductTreeSpace, capacity: &SubmeasureHandle) -> Result<bool, GameError> {
    let leaves = space.leaf_count();
    if leaves > LEMMA_MAX_LEAVES {
        return Err(GameError::TooLarge {
            leaves,
            max: LEMMA_MAX_LEAVES,
        });
    }
    let ctable: Vec<f64> = (0..(1u64 << leaves))
        .map(|m| capacity.eval(&space.set_from_mask(m)))
        .collect();
    for a in 0..(1u64 << leaves) {
        let union = flat_closure_union(&ctable, leaves, a);
        if ctable[union as usize] > ctable[a as usize] + TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One cell of the exhaustive correspondence check.
#[derive(Debug, Clone)]
pub struct LemmaCell {
    pub target_mask: u64,
    pub epsilon: f64,
    pub capacity_of_target: f64,
    pub winner: Winner,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct GamelemmaReport {
    pub cells: Vec<LemmaCell>,
    pub violations: Vec<String>,
    /// Second-implication anomalies on capacities that fail the stability
    /// hypothesis; recorded, never counted as violations.
    pub observations: Vec<String>,
    /// Whether the flat-closure stability hypothesis held exhaustively.
    pub hypothesis_ok: bool,
    pub boundary_cells: usize,
    pub boundary_all_player_one: bool,
    pub replays_checked: usize,
}

impl GamelemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks, over every target set and epsilon in the grid, that
/// `c(B) < eps` implies a Player I win and -- for capacities satisfying the
/// flat-closure stability hypothesis -- that a Player I win implies
/// `c(B) <= eps`. Where the hypothesis fails, second-implication anomalies
/// are recorded as observations instead. Boundary cells (`c(B) = eps`
/// within tolerance) are reported without assertion. With `replay` set,
/// every cell's winning strategy is replayed against full counter-line
/// enumeration.
pub fn verify_gamelemma(
    space: &ProductTreeSpace,
    capacity: &SubmeasureHandle,
    epsilon_grid: &[f64],
    replay: bool,
) -> Result<GamelemmaReport, GameError> {
    let leaves = space.leaf_count();
    if leaves > LEMMA_MAX_LEAVES {
        return Err(GameError::TooLarge {
            leaves,
            max: LEMMA_MAX_LEAVES,
        });
    }
    let hypothesis_ok = flat_closures_stable(space, capacity)?;
    let mut cells = Vec::new();
    let mut violations = Vec::new();
    let mut observations = Vec::new();
    let mut boundary_cells = 0usize;
    let mut boundary_all_player_one = true;
    let mut replays_checked = 0usize;

    for target_mask in 0..(1u64 << leaves) {
        let target = space.set_from_mask(target_mask);
        let mut solver = Solver::new(space, capacity, target_mask);
        let (min_c, _) = solver.min_winning_capacity();
        let c_b = solver.ctable[target_mask as usize];
        for &epsilon in epsilon_grid {
            let winner = if min_c <= epsilon + TOL {
                Winner::PlayerOne
            } else {
                Winner::PlayerTwo
            };
            let boundary = (c_b - epsilon).abs() <= TOL;
            if boundary {
                boundary_cells += 1;
                if winner != Winner::PlayerOne {
                    boundary_all_player_one = false;
                }
            } else {
                if c_b < epsilon && winner != Winner::PlayerOne {
                    violations.push(format!(
                        "B={target_mask:#b} eps={epsilon}: c(B)={c_b} < eps but Player II wins"
                    ));
                }
                if winner == Winner::PlayerOne && c_b > epsilon + TOL {
                    let line = format!(
                        "B={target_mask:#b} eps={epsilon}: Player I wins but c(B)={c_b} > eps"
                    );
                    if hypothesis_ok {
                        violations.push(line);
                    } else {
                        observations.push(line);
                    }
                }
            }
            if replay {
                let game = TruncatedGame {
                    space,
                    capacity,
                    target: target.clone(),
                    epsilon,
                };
                let outcome = solve_minimax(&game)?;
                if !replay_strategy(&game, &outcome) {
                    violations.push(format!(
                        "B={target_mask:#b} eps={epsilon}: strategy replay failed"
                    ));
                }
                replays_checked += 1;
            }
            cells.push(LemmaCell {
                target_mask,
                epsilon,
                capacity_of_target: c_b,
                winner,
                boundary,
            });
        }
    }
    Ok(GamelemmaReport {
        cells,
        violations,
        observations,
        hypothesis_ok,
        boundary_cells,
        boundary_all_player_one,
        replays_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{DerivedCapacity, GoodNorm, NormTower};

    fn uniform_handle(space: &ProductTreeSpace) -> SubmeasureHandle {
        SubmeasureHandle::uniform("u", space)
    }

    #[test]
    fn epsilon_at_least_full_capacity_lets_player_one_cover_everything() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = uniform_handle(&space);
        let game = TruncatedGame {
            space: &space,
            capacity: &u,
            target: space.full_set(),
            epsilon: 1.0,
        };
        let outcome = solve_minimax(&game).unwrap();
        assert_eq!(outcome.winner, Winner::PlayerOne);
        assert!(replay_strategy(&game, &outcome));
    }

    #[test]
    fn two_leaf_examples() {
        let space = ProductTreeSpace::new(vec![2]).unwrap();
        let u = uniform_handle(&space);
        // eps = 0.4: Player I can cover nothing, each leaf costs 0.5
        let game = TruncatedGame {
            space: &space,
            capacity: &u,
            target: space.full_set(),
            epsilon: 0.4,
        };
        let outcome = solve_minimax(&game).unwrap();
        assert_eq!(outcome.winner, Winner::PlayerTwo);
        assert!(replay_strategy(&game, &outcome));
        // eps = 0.5: Player I covers one leaf, Player II takes the other
        let game = TruncatedGame {
            space: &space,
            capacity: &u,
            target: space.full_set(),
            epsilon: 0.5,
        };
        let outcome = solve_minimax(&game).unwrap();
        assert_eq!(outcome.winner, Winner::PlayerTwo);
        assert!(replay_strategy(&game, &outcome));
    }

    #[test]
    fn empty_target_is_a_player_one_win_at_any_epsilon() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = uniform_handle(&space);
        for eps in [0.01, 0.3, 1.0] {
            let game = TruncatedGame {
                space: &space,
                capacity: &u,
                target: space.empty_set(),
                epsilon: eps,
            };
            let outcome = solve_minimax(&game).unwrap();
            assert_eq!(outcome.winner, Winner::PlayerOne);
            assert!(replay_strategy(&game, &outcome));
        }
    }

    #[test]
    fn late_covering_is_blocked_by_the_pacing_rule() {
        // B = X on uniform [2,2] at eps = 1/2: without pacing Player I could
        // wait for the first coordinate and then cover that whole branch
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = uniform_handle(&space);
        let game = TruncatedGame {
            space: &space,
            capacity: &u,
            target: space.full_set(),
            epsilon: 0.5,
        };
        let outcome = solve_minimax(&game).unwrap();
        assert_eq!(outcome.winner, Winner::PlayerTwo);
        assert!(replay_strategy(&game, &outcome));
    }

    #[test]
    fn correspondence_holds_on_two_leaf_space_with_quarter_grid() {
        let space = ProductTreeSpace::new(vec![2]).unwrap();
        let u = uniform_handle(&space);
        let report = verify_gamelemma(&space, &u, &[0.25, 0.5, 0.75, 1.0], true).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert_eq!(report.cells.len(), 16);
        assert_eq!(report.replays_checked, 16);
    }

    #[test]
    fn correspondence_holds_on_depth_two_mixed_tower() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let cap = SubmeasureHandle::from_capacity(
            "maxmix",
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
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
        let report = verify_gamelemma(&space, &cap, &grid, true).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
    }

    #[test]
    fn winner_is_monotone_in_epsilon_and_target() {
        let space = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let u = uniform_handle(&space);
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
        let report = verify_gamelemma(&space, &u, &grid, false).unwrap();
        // monotone in eps: once Player I wins, larger eps stays a win
        for target in 0..16u64 {
            let mut seen_one = false;
            for cell in report
                .cells
                .iter()
                .filter(|c| c.target_mask == target)
            {
                if seen_one {
                    assert_eq!(cell.winner, Winner::PlayerOne);
                }
                seen_one |= cell.winner == Winner::PlayerOne;
            }
        }
        // monotone in B: Player II keeps winning on supersets
        for &eps in &grid {
            for a in 0..16u64 {
                for b in 0..16u64 {
                    if a & b == a {
                        let wa = report
                            .cells
                            .iter()
                            .find(|c| c.target_mask == a && c.epsilon == eps)
                            .unwrap()
                            .winner;
                        let wb = report
                            .cells
                            .iter()
                            .find(|c| c.target_mask == b && c.epsilon == eps)
                            .unwrap()
                            .winner;
                        if wa == Winner::PlayerTwo {
                            assert_eq!(wb, Winner::PlayerTwo);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unstable_flat_closures_are_detected_and_downgrade_the_second_implication() {
        // max above and below a weighted level: from {100} either cell of
        // the other branch can be covered for free, but not both, so the
        // flat closure {000..011, 100, 101} outgrows c({100}) = 1/2
        let space = ProductTreeSpace::new(vec![2, 2, 2]).unwrap();
        let cap = SubmeasureHandle::from_capacity(
            "mwm",
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
        assert!(!flat_closures_stable(&space, &cap).unwrap());
        // the concrete exploit: B = {000, 010} has c(B) = 1 yet Player I
        // wins at eps = 1/2 by deferring the cell choice
        let game = TruncatedGame {
            space: &space,
            capacity: &cap,
            target: space.set_from_mask(0b101),
            epsilon: 0.5,
        };
        let outcome = solve_minimax(&game).unwrap();
        assert_eq!(outcome.winner, Winner::PlayerOne);
        assert!(replay_strategy(&game, &outcome));
        // the verifier files it under observations, not violations
        let report = verify_gamelemma(&space, &cap, &[0.5], false).unwrap();
        assert!(!report.hypothesis_ok);
        assert!(report.passed());
        assert!(!report.observations.is_empty());

        // measures and coordinate-strict towers satisfy the hypothesis
        let uniform = SubmeasureHandle::uniform("u", &space);
        assert!(flat_closures_stable(&space, &uniform).unwrap());
        // weighted above max keeps every branch's contribution pinned, so
        // flat closures stay inside the branches already paid for
        let space2 = ProductTreeSpace::new(vec![2, 2]).unwrap();
        let wm = SubmeasureHandle::from_capacity(
            "wm",
            DerivedCapacity::new(
                NormTower::new(
                    space2.clone(),
                    vec![
                        GoodNorm::weighted_p(vec![0.5, 0.5], 1.0).unwrap(),
                        GoodNorm::max(2),
                    ],
                )
                .unwrap(),
            ),
        );
        assert!(flat_closures_stable(&space2, &wm).unwrap());
        // max above weighted is already unstable (either leaf of the other
        // branch is a flat addition, on different paths), yet the exhaustive
        // sweep finds no second-implication anomaly: the hypothesis is
        // sufficient, not necessary
        let mw = SubmeasureHandle::from_capacity(
            "mw",
            DerivedCapacity::new(
                NormTower::new(
                    space2.clone(),
                    vec![
                        GoodNorm::max(2),
                        GoodNorm::weighted_p(vec![0.5, 0.5], 1.0).unwrap(),
                    ],
                )
                .unwrap(),
            ),
        );
        assert!(!flat_closures_stable(&space2, &mw).unwrap());
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
        let report = verify_gamelemma(&space2, &mw, &grid, false).unwrap();
        assert!(report.passed());
        assert!(report.observations.is_empty());
    }

    #[test]
    fn guards_reject_large_spaces() {
        let space = ProductTreeSpace::new(vec![2, 2, 2, 2]).unwrap(); // 16 leaves
        let u = uniform_handle(&space);
        let game = TruncatedGame {
            space: &space,
            capacity: &u,
            target: space.full_set(),
            epsilon: 0.5,
        };
        assert!(matches!(
            solve_minimax(&game),
            Err(GameError::TooLarge { .. })
        ));
        let space9 = ProductTreeSpace::new(vec![3, 3]).unwrap();
        let u9 = uniform_handle(&space9);
        assert!(matches!(
            verify_gamelemma(&space9, &u9, &[0.5], false),
            Err(GameError::TooLarge { .. })
        ));
    }
}
