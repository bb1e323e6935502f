//! Exact brute-force solvers for all four puzzles.
//!
//! These are the ground truth for dataset filtering, answer scoring, few-shot
//! exemplar generation, and the mock backend. Search orders are fixed so the
//! returned solutions are reproducible byte for byte:
//!
//! - drop water: breadth-first over (level_a, level_b), successors in the
//!   fixed move-enum order;
//! - number path: depth-first over move sequences, Double before AddOne;
//! - arithmetic: both levels enumerate moves in lexicographic
//!   (lhs, rhs, operator) order;
//! - minimal grass: exhaustive over factor-pair combinations, widths
//!   ascending, ties broken by the lexicographically smallest
//!   (w1, h1, w2, h2, w3, h3).

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::puzzles::{
    apply_move, divisor_pairs, is_goal, legal_moves, ArithmeticInstance, DropWaterInstance,
    DropWaterMove, DropWaterState, Move, MinimalGrassInstance, NumberPathInstance, PuzzleInstance,
    PuzzleState,
};

/// A solution witness: the move sequence and every state along it,
/// `states.len() == moves.len() + 1`, with `states[0]` the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub moves: Vec<Move>,
    pub states: Vec<PuzzleState>,
}

impl Plan {
    pub fn final_state(&self) -> &PuzzleState {
        self.states.last().expect("plan has at least the initial state")
    }
}

/// Optimal dimension assignment for a minimal-grass instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrassSolution {
    pub dims: [(u32, u32); 3],
    pub grass_area: u64,
}

/// Solves any instance; `None` when unsolvable (minimal grass always has a
/// solution).
pub fn solve(instance: &PuzzleInstance) -> Option<Plan> {
    match instance {
        PuzzleInstance::DropWater(i) => solve_drop_water(i),
        PuzzleInstance::NumberPath(i) => solve_number_path(i),
        PuzzleInstance::Arithmetic(i) => solve_arithmetic(i),
        PuzzleInstance::MinimalGrass(i) => Some(grass_plan(i, &solve_minimal_grass(i))),
    }
}

/// Shortest plan reaching the target level in either bottle, or `None` when
/// unreachable within `max_steps` operations.
pub fn solve_drop_water(instance: &DropWaterInstance) -> Option<Plan> {
    let wrapped = PuzzleInstance::DropWater(*instance);
    let start = DropWaterState {
        level_a: 0,
        level_b: 0,
    };
    let mut parent: BTreeMap<DropWaterState, (DropWaterState, DropWaterMove)> = BTreeMap::new();
    let mut depth: BTreeMap<DropWaterState, u32> = BTreeMap::new();
    depth.insert(start, 0);
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(state) = queue.pop_front() {
        let d = depth[&state];
        if state.level_a == instance.target || state.level_b == instance.target {
            let mut moves = Vec::new();
            let mut states = Vec::new();
            let mut cur = state;
            states.push(PuzzleState::DropWater(cur));
            while let Some((prev, mv)) = parent.get(&cur) {
                moves.push(Move::DropWater(*mv));
                states.push(PuzzleState::DropWater(*prev));
                cur = *prev;
            }
            moves.reverse();
            states.reverse();
            return Some(Plan { moves, states });
        }
        if d == instance.max_steps {
            continue;
        }
        for mv in DropWaterMove::ALL {
            let next = match apply_move(
                &wrapped,
                &PuzzleState::DropWater(state),
                &Move::DropWater(mv),
            ) {
                Ok(PuzzleState::DropWater(s)) => s,
                _ => continue,
            };
            if !depth.contains_key(&next) {
                depth.insert(next, d + 1);
                parent.insert(next, (state, mv));
                queue.push_back(next);
            }
        }
    }
    None
}

/// Length of the shortest plan to the target ignoring any step cap, or
/// `None` when unreachable at all. Full BFS over the
/// (cap_a + 1) x (cap_b + 1) state space.
pub fn min_steps_drop_water(cap_a: u32, cap_b: u32, target: u32) -> Option<u32> {
    let instance = DropWaterInstance {
        cap_a,
        cap_b,
        target,
        // enough to exhaust the whole state space
        max_steps: (cap_a + 1) * (cap_b + 1),
    };
    solve_drop_water(&instance).map(|p| p.moves.len() as u32)
}

/// A move sequence of exactly `steps` operations from start to goal, or
/// `None`. Depth-first, Double before AddOne, so the first sequence in that
/// order is returned.
pub fn solve_number_path(instance: &NumberPathInstance) -> Option<Plan> {
    let wrapped = PuzzleInstance::NumberPath(*instance);
    let n = instance.steps;
    // sequences in binary-counter order: bit 0 = Double, bit 1 = AddOne
    'seq: for bits in 0u64..(1u64 << n) {
        let mut state = wrapped.initial_state();
        let mut moves = Vec::with_capacity(n as usize);
        let mut states = Vec::with_capacity(n as usize + 1);
        states.push(state.clone());
        for k in 0..n {
            let mv = if bits >> (n - 1 - k) & 1 == 0 {
                Move::NumberPath(crate::puzzles::NumberPathMove::Double)
            } else {
                Move::NumberPath(crate::puzzles::NumberPathMove::AddOne)
            };
            state = match apply_move(&wrapped, &state, &mv) {
                Ok(s) => s,
                Err(_) => continue 'seq, // overflow
            };
            moves.push(mv);
            states.push(state.clone());
        }
        if is_goal(&wrapped, &state, n as usize) {
            return Some(Plan { moves, states });
        }
    }
    None
}

/// A two-move plan ending in exactly the goal value, or `None`. Enumerates
/// all operand pairs and operators at both levels in the documented order.
pub fn solve_arithmetic(instance: &ArithmeticInstance) -> Option<Plan> {
    let wrapped = PuzzleInstance::Arithmetic(*instance);
    let start = wrapped.initial_state();
    for first in legal_moves(&wrapped, &start).ok()? {
        let mid = apply_move(&wrapped, &start, &first).ok()?;
        for second in legal_moves(&wrapped, &mid).ok()? {
            let end = apply_move(&wrapped, &mid, &second).ok()?;
            if is_goal(&wrapped, &end, 2) {
                return Some(Plan {
                    moves: alloc::vec![first, second],
                    states: alloc::vec![start.clone(), mid, end],
                });
            }
        }
    }
    None
}

/// Exhaustive minimization of (sum of widths)(sum of heights) - (sum of
/// areas) over all factor-pair assignments.
pub fn solve_minimal_grass(instance: &MinimalGrassInstance) -> GrassSolution {
    let pairs: [Vec<(u32, u32)>; 3] = [
        divisor_pairs(instance.areas[0]),
        divisor_pairs(instance.areas[1]),
        divisor_pairs(instance.areas[2]),
    ];
    let total_area: u64 = instance.areas.iter().map(|&a| a as u64).sum();
    let mut best: Option<GrassSolution> = None;
    for &d1 in &pairs[0] {
        for &d2 in &pairs[1] {
            for &d3 in &pairs[2] {
                let sum_w = (d1.0 + d2.0 + d3.0) as u64;
                let sum_h = (d1.1 + d2.1 + d3.1) as u64;
                let grass_area = sum_w * sum_h - total_area;
                // strict improvement keeps the lexicographically smallest tie
                if best.map_or(true, |b| grass_area < b.grass_area) {
                    best = Some(GrassSolution {
                        dims: [d1, d2, d3],
                        grass_area,
                    });
                }
            }
        }
    }
    best.expect("every area has at least one factor pair")
}

/// Renders a grass solution as the three-move assignment plan.
pub fn grass_plan(instance: &MinimalGrassInstance, solution: &GrassSolution) -> Plan {
    let wrapped = PuzzleInstance::MinimalGrass(*instance);
    let mut state = wrapped.initial_state();
    let mut moves = Vec::new();
    let mut states = Vec::new();
    states.push(state.clone());
    for (idx, &(width, height)) in solution.dims.iter().enumerate() {
        let mv = Move::MinimalGrass(crate::puzzles::GrassMove {
            building: idx as u8 + 1,
            width,
            height,
        });
        state = apply_move(&wrapped, &state, &mv).expect("oracle dims are legal");
        moves.push(mv);
        states.push(state.clone());
    }
    Plan { moves, states }
}
