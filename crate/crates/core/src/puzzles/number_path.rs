//! Number-path semantics: double the value or add one, a fixed number of
//! times.

use alloc::format;
use alloc::string::{String, ToString};

use super::{NumberPathInstance, NumberPathMove, NumberPathState, PuzzleError};

pub(super) fn apply(
    state: &NumberPathState,
    mv: NumberPathMove,
) -> Result<NumberPathState, PuzzleError> {
    let value = match mv {
        NumberPathMove::Double => state.value.checked_mul(2),
        NumberPathMove::AddOne => state.value.checked_add(1),
    };
    value
        .map(|value| NumberPathState { value })
        .ok_or_else(|| PuzzleError::IllegalMove("value overflow".to_string()))
}

pub(super) fn render_problem(i: &NumberPathInstance) -> String {
    format!(
        "Transform the number {} into the number {} in exactly {} steps. In each step you \
may either double the current number (x2) or add one to it (+1). A state is written as \
[current number], starting from [{}].",
        i.start, i.goal, i.steps, i.start
    )
}
