//! The four puzzles: instance parameters, states, legal moves, transition
//! semantics, goal predicates, and canonical text rendering.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

mod arithmetic;
mod drop_water;
mod minimal_grass;
mod number_path;
mod state_text;

pub use state_text::{parse_dims, parse_state, render_state, StateParseError};

/// Which of the four puzzles an instance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuzzleKind {
    DropWater,
    NumberPath,
    Arithmetic,
    MinimalGrass,
}

impl PuzzleKind {
    pub const ALL: [PuzzleKind; 4] = [
        PuzzleKind::DropWater,
        PuzzleKind::NumberPath,
        PuzzleKind::Arithmetic,
        PuzzleKind::MinimalGrass,
    ];

    /// Human-readable task name, as used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            PuzzleKind::DropWater => "Drop Water",
            PuzzleKind::NumberPath => "Number Path",
            PuzzleKind::Arithmetic => "Arithmetic",
            PuzzleKind::MinimalGrass => "Minimal Grass",
        }
    }

    /// Stable tag used in file formats and seed derivation.
    pub fn tag(self) -> &'static str {
        match self {
            PuzzleKind::DropWater => "drop_water",
            PuzzleKind::NumberPath => "number_path",
            PuzzleKind::Arithmetic => "arithmetic",
            PuzzleKind::MinimalGrass => "minimal_grass",
        }
    }
}

/// Two unmarked bottles of capacities `cap_a`/`cap_b`; reach exactly
/// `target` liters in either bottle within `max_steps` operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DropWaterInstance {
    pub cap_a: u32,
    pub cap_b: u32,
    pub target: u32,
    pub max_steps: u32,
}

/// Turn `start` into `goal` in exactly `steps` operations, each either
/// doubling or adding one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NumberPathInstance {
    pub start: u64,
    pub goal: u64,
    pub steps: u32,
}

/// Combine the three `numbers` with arithmetic operations to reach `goal`.
/// `numbers` is kept sorted ascending; it is a multiset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArithmeticInstance {
    pub numbers: [u32; 3],
    pub goal: u32,
}

impl ArithmeticInstance {
    pub fn new(mut numbers: [u32; 3], goal: u32) -> Self {
        numbers.sort_unstable();
        ArithmeticInstance { numbers, goal }
    }
}

/// Choose integer dimensions for three rectangular buildings with the given
/// floor `areas` so that the leftover green space in their bounding box is
/// minimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MinimalGrassInstance {
    pub areas: [u32; 3],
}

/// A parameterized instance of one of the four puzzles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PuzzleInstance {
    DropWater(DropWaterInstance),
    NumberPath(NumberPathInstance),
    Arithmetic(ArithmeticInstance),
    MinimalGrass(MinimalGrassInstance),
}

impl PuzzleInstance {
    pub fn kind(&self) -> PuzzleKind {
        match self {
            PuzzleInstance::DropWater(_) => PuzzleKind::DropWater,
            PuzzleInstance::NumberPath(_) => PuzzleKind::NumberPath,
            PuzzleInstance::Arithmetic(_) => PuzzleKind::Arithmetic,
            PuzzleInstance::MinimalGrass(_) => PuzzleKind::MinimalGrass,
        }
    }

    /// The state before any move has been applied.
    pub fn initial_state(&self) -> PuzzleState {
        match self {
            PuzzleInstance::DropWater(_) => PuzzleState::DropWater(DropWaterState {
                level_a: 0,
                level_b: 0,
            }),
            PuzzleInstance::NumberPath(i) => {
                PuzzleState::NumberPath(NumberPathState { value: i.start })
            }
            PuzzleInstance::Arithmetic(i) => PuzzleState::Arithmetic(ArithmeticState {
                remaining: {
                    let mut v: Vec<Rational> = i
                        .numbers
                        .iter()
                        .map(|&n| Rational::from_integer(n as i64))
                        .collect();
                    v.sort();
                    v
                },
            }),
            PuzzleInstance::MinimalGrass(_) => {
                PuzzleState::MinimalGrass(MinimalGrassState { dims: [None; 3] })
            }
        }
    }
}

/// Water levels in the two bottles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DropWaterState {
    pub level_a: u32,
    pub level_b: u32,
}

/// Current value on the path from start to goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NumberPathState {
    pub value: u64,
}

/// Multiset of values not yet combined, kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArithmeticState {
    pub remaining: Vec<Rational>,
}

/// Dimensions chosen so far, one slot per building.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MinimalGrassState {
    pub dims: [Option<(u32, u32)>; 3],
}

/// Puzzle-specific search state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PuzzleState {
    DropWater(DropWaterState),
    NumberPath(NumberPathState),
    Arithmetic(ArithmeticState),
    MinimalGrass(MinimalGrassState),
}

impl PuzzleState {
    pub fn kind(&self) -> PuzzleKind {
        match self {
            PuzzleState::DropWater(_) => PuzzleKind::DropWater,
            PuzzleState::NumberPath(_) => PuzzleKind::NumberPath,
            PuzzleState::Arithmetic(_) => PuzzleKind::Arithmetic,
            PuzzleState::MinimalGrass(_) => PuzzleKind::MinimalGrass,
        }
    }
}

/// One of the six bottle operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropWaterMove {
    FillA,
    FillB,
    EmptyA,
    EmptyB,
    PourAToB,
    PourBToA,
}

impl DropWaterMove {
    pub const ALL: [DropWaterMove; 6] = [
        DropWaterMove::FillA,
        DropWaterMove::FillB,
        DropWaterMove::EmptyA,
        DropWaterMove::EmptyB,
        DropWaterMove::PourAToB,
        DropWaterMove::PourBToA,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NumberPathMove {
    Double,
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub const ALL: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];

    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

/// Combine `lhs` and `rhs` (both drawn from the remaining multiset) with `op`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArithmeticMove {
    pub lhs: Rational,
    pub rhs: Rational,
    pub op: ArithOp,
}

/// Assign `width` x `height` to building `building` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GrassMove {
    pub building: u8,
    pub width: u32,
    pub height: u32,
}

/// A legal transition in one of the four puzzles.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    DropWater(DropWaterMove),
    NumberPath(NumberPathMove),
    Arithmetic(ArithmeticMove),
    MinimalGrass(GrassMove),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PuzzleError {
    #[error("state kind {state:?} does not match instance kind {instance:?}")]
    KindMismatch {
        instance: PuzzleKind,
        state: PuzzleKind,
    },
    #[error("illegal move: {0}")]
    IllegalMove(String),
}

fn check_kinds(instance: &PuzzleInstance, state: &PuzzleState) -> Result<(), PuzzleError> {
    if instance.kind() == state.kind() {
        Ok(())
    } else {
        Err(PuzzleError::KindMismatch {
            instance: instance.kind(),
            state: state.kind(),
        })
    }
}

/// Enumerates every move whose application is defined in `state`, in a fixed
/// deterministic order. No-op moves (e.g. filling a full bottle) are included;
/// see [`is_redundant`].
pub fn legal_moves(
    instance: &PuzzleInstance,
    state: &PuzzleState,
) -> Result<Vec<Move>, PuzzleError> {
    check_kinds(instance, state)?;
    Ok(match (instance, state) {
        (PuzzleInstance::DropWater(_), PuzzleState::DropWater(_)) => DropWaterMove::ALL
            .iter()
            .map(|&m| Move::DropWater(m))
            .collect(),
        (PuzzleInstance::NumberPath(_), PuzzleState::NumberPath(_)) => {
            [NumberPathMove::Double, NumberPathMove::AddOne]
                .iter()
                .map(|&m| Move::NumberPath(m))
                .collect()
        }
        (PuzzleInstance::Arithmetic(_), PuzzleState::Arithmetic(s)) => {
            arithmetic::legal_moves(s).into_iter().map(Move::Arithmetic).collect()
        }
        (PuzzleInstance::MinimalGrass(i), PuzzleState::MinimalGrass(s)) => {
            minimal_grass::legal_moves(i, s)
                .into_iter()
                .map(Move::MinimalGrass)
                .collect()
        }
        _ => unreachable!("kinds checked above"),
    })
}

/// Applies `mv` to `state`. The move must come from [`legal_moves`]; anything
/// else is rejected with a reason.
pub fn apply_move(
    instance: &PuzzleInstance,
    state: &PuzzleState,
    mv: &Move,
) -> Result<PuzzleState, PuzzleError> {
    check_kinds(instance, state)?;
    match (instance, state, mv) {
        (PuzzleInstance::DropWater(i), PuzzleState::DropWater(s), Move::DropWater(m)) => {
            Ok(PuzzleState::DropWater(drop_water::apply(i, s, *m)))
        }
        (PuzzleInstance::NumberPath(_), PuzzleState::NumberPath(s), Move::NumberPath(m)) => {
            number_path::apply(s, *m).map(PuzzleState::NumberPath)
        }
        (PuzzleInstance::Arithmetic(_), PuzzleState::Arithmetic(s), Move::Arithmetic(m)) => {
            arithmetic::apply(s, m).map(PuzzleState::Arithmetic)
        }
        (PuzzleInstance::MinimalGrass(i), PuzzleState::MinimalGrass(s), Move::MinimalGrass(m)) => {
            minimal_grass::apply(i, s, *m).map(PuzzleState::MinimalGrass)
        }
        _ => Err(PuzzleError::IllegalMove(String::from(
            "move kind does not match puzzle kind",
        ))),
    }
}

/// True when applying `mv` leaves the state unchanged. Redundant moves are
/// legal and count toward the step budget; the verifier merely flags them.
pub fn is_redundant(instance: &PuzzleInstance, state: &PuzzleState, mv: &Move) -> bool {
    match apply_move(instance, state, mv) {
        Ok(next) => next == *state,
        Err(_) => false,
    }
}

/// Goal predicate. `moves_applied` is the number of moves taken so far; it
/// matters for the step-capped and exact-step puzzles.
pub fn is_goal(instance: &PuzzleInstance, state: &PuzzleState, moves_applied: usize) -> bool {
    match (instance, state) {
        (PuzzleInstance::DropWater(i), PuzzleState::DropWater(s)) => {
            moves_applied <= i.max_steps as usize
                && (s.level_a == i.target || s.level_b == i.target)
        }
        (PuzzleInstance::NumberPath(i), PuzzleState::NumberPath(s)) => {
            s.value == i.goal && moves_applied == i.steps as usize
        }
        (PuzzleInstance::Arithmetic(i), PuzzleState::Arithmetic(s)) => {
            s.remaining.len() == 1 && s.remaining[0] == Rational::from_integer(i.goal as i64)
        }
        (PuzzleInstance::MinimalGrass(_), PuzzleState::MinimalGrass(s)) => {
            s.dims.iter().all(Option::is_some)
        }
        _ => false,
    }
}

/// Deterministic natural-language problem statement for an instance.
/// Byte-identical across runs for the same instance.
pub fn render_problem(instance: &PuzzleInstance) -> String {
    match instance {
        PuzzleInstance::DropWater(i) => drop_water::render_problem(i),
        PuzzleInstance::NumberPath(i) => number_path::render_problem(i),
        PuzzleInstance::Arithmetic(i) => arithmetic::render_problem(i),
        PuzzleInstance::MinimalGrass(i) => minimal_grass::render_problem(i),
    }
}

/// Short parameter echo used by ToT episode texts, e.g. `2 3 10 16`.
pub fn render_input_line(instance: &PuzzleInstance) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    match instance {
        PuzzleInstance::DropWater(i) => {
            let _ = write!(s, "{} {} {} {}", i.cap_a, i.cap_b, i.target, i.max_steps);
        }
        PuzzleInstance::NumberPath(i) => {
            let _ = write!(s, "{} {} {}", i.start, i.goal, i.steps);
        }
        PuzzleInstance::Arithmetic(i) => {
            let _ = write!(s, "{} {} {} {}", i.numbers[0], i.numbers[1], i.numbers[2], i.goal);
        }
        PuzzleInstance::MinimalGrass(i) => {
            let _ = write!(s, "{} {} {}", i.areas[0], i.areas[1], i.areas[2]);
        }
    }
    s
}

pub use minimal_grass::divisor_pairs;

#[cfg(test)]
mod tests;
