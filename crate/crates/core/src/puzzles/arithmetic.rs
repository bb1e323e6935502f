//! Arithmetic-puzzle semantics: combine two values from the multiset with
//! `+ - * /`, exactly, until one value remains.
//!
//! Both operand orders are distinct moves, negative intermediates are
//! allowed, and division by zero is excluded from the legal set.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ArithmeticInstance, ArithmeticMove, ArithmeticState, ArithOp, PuzzleError};
use crate::rational::Rational;

impl ArithmeticMove {
    /// Exact result of the operation; `None` for division by zero.
    pub fn result(&self) -> Option<Rational> {
        match self.op {
            ArithOp::Add => Some(self.lhs.checked_add(&self.rhs)),
            ArithOp::Sub => Some(self.lhs.checked_sub(&self.rhs)),
            ArithOp::Mul => Some(self.lhs.checked_mul(&self.rhs)),
            ArithOp::Div => self.lhs.checked_div(&self.rhs),
        }
    }
}

/// Both operands must be present in the multiset (a duplicated operand needs
/// multiplicity two). Order: lexicographic by (lhs, rhs), then operator.
pub(super) fn legal_moves(state: &ArithmeticState) -> Vec<ArithmeticMove> {
    let mut distinct: Vec<&Rational> = Vec::new();
    for v in &state.remaining {
        if distinct.last() != Some(&v) {
            distinct.push(v);
        }
    }
    let count = |v: &Rational| state.remaining.iter().filter(|x| *x == v).count();
    let mut moves = Vec::new();
    for lhs in &distinct {
        for rhs in &distinct {
            let needed = if lhs == rhs { 2 } else { 1 };
            if count(lhs) < needed || count(rhs) < 1 {
                continue;
            }
            for op in ArithOp::ALL {
                let mv = ArithmeticMove {
                    lhs: (*lhs).clone(),
                    rhs: (*rhs).clone(),
                    op,
                };
                if mv.result().is_some() {
                    moves.push(mv);
                }
            }
        }
    }
    moves
}

pub(super) fn apply(
    state: &ArithmeticState,
    mv: &ArithmeticMove,
) -> Result<ArithmeticState, PuzzleError> {
    let mut remaining = state.remaining.clone();
    for operand in [&mv.lhs, &mv.rhs] {
        match remaining.iter().position(|v| v == operand) {
            Some(idx) => {
                remaining.remove(idx);
            }
            None => {
                return Err(PuzzleError::IllegalMove(format!(
                    "operand {operand} is not among the remaining values"
                )));
            }
        }
    }
    let result = mv
        .result()
        .ok_or_else(|| PuzzleError::IllegalMove("division by zero".to_string()))?;
    remaining.push(result);
    remaining.sort();
    Ok(ArithmeticState { remaining })
}

pub(super) fn render_problem(i: &ArithmeticInstance) -> String {
    format!(
        "Use the numbers {} {} {} and arithmetic operations (+, -, *, /) to reach exactly \
{}. Each number must be used exactly once: every operation combines two of the remaining \
values into one, so two operations leave a single final value. A state is written as the \
bracketed list of remaining values, starting from [{}, {}, {}]. The input is {} {} {} {}",
        i.numbers[0],
        i.numbers[1],
        i.numbers[2],
        i.goal,
        i.numbers[0],
        i.numbers[1],
        i.numbers[2],
        i.numbers[0],
        i.numbers[1],
        i.numbers[2],
        i.goal,
    )
}
