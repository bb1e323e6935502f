//! Chain replay and verdicts.

use alloc::format;
use alloc::string::String;

use super::ops::parse_operation;
use super::{Chain, FailureReason, Verdict};
use crate::oracle::solve_minimal_grass;
use crate::puzzles::{
    apply_move, is_goal, legal_moves, parse_state, render_state, Move, PuzzleInstance,
    PuzzleState,
};

pub(super) enum ReplayError {
    Parse(String),
    Illegal(String),
}

/// Replays a chain from the instance's initial state, checking each
/// operation and each rendered intermediate state. Returns the final state
/// and the number of moves applied.
pub(super) fn replay_chain(
    instance: &PuzzleInstance,
    chain: &Chain,
) -> Result<(PuzzleState, usize), ReplayError> {
    let kind = instance.kind();
    let declared_initial = parse_state(kind, &chain.initial)
        .map_err(|e| ReplayError::Parse(format!("initial state: {e}")))?;
    let mut state = instance.initial_state();
    if declared_initial != state {
        return Err(ReplayError::Illegal(format!(
            "chain starts at {} but the instance starts at {}",
            chain.initial,
            render_state(&state)
        )));
    }
    let mut moves_applied = 0usize;
    for (idx, link) in chain.links.iter().enumerate() {
        let position = idx + 1;
        match &link.operation {
            Some(op_text) => {
                let parsed = parse_operation(kind, &state, op_text)
                    .map_err(|e| ReplayError::Parse(format!("link {position}: {e}")))?;
                let next = apply_move(instance, &state, &parsed.mv).map_err(|e| {
                    ReplayError::Illegal(format!("link {position} ({op_text}): {e}"))
                })?;
                if let (Some(claimed), Move::Arithmetic(am)) = (&parsed.claimed_result, &parsed.mv)
                {
                    let computed = am.result().expect("applied move has a result");
                    if computed != *claimed {
                        return Err(ReplayError::Illegal(format!(
                            "link {position}: operation claims {claimed} but computing gives {computed}"
                        )));
                    }
                }
                state = next;
            }
            None => {
                // recap transition without an operation: accept any state a
                // single legal move reaches
                let Some(target_text) = &link.state else {
                    return Err(ReplayError::Parse(format!(
                        "link {position} has neither operation nor state"
                    )));
                };
                let target = parse_state(kind, target_text)
                    .map_err(|e| ReplayError::Parse(format!("link {position}: {e}")))?;
                let moves = legal_moves(instance, &state)
                    .map_err(|e| ReplayError::Illegal(format!("link {position}: {e}")))?;
                let reached = moves.iter().find_map(|mv: &Move| {
                    apply_move(instance, &state, mv)
                        .ok()
                        .filter(|s| *s == target)
                });
                match reached {
                    Some(next) => state = next,
                    None => {
                        return Err(ReplayError::Illegal(format!(
                            "link {position}: no legal move goes from {} to {target_text}",
                            render_state(&state)
                        )));
                    }
                }
            }
        }
        if let Some(state_text) = &link.state {
            let declared = parse_state(kind, state_text)
                .map_err(|e| ReplayError::Parse(format!("link {position}: {e}")))?;
            if declared != state {
                return Err(ReplayError::Illegal(format!(
                    "link {position}: chain claims {state_text} but replay gives {}",
                    render_state(&state)
                )));
            }
        }
        moves_applied += 1;
    }
    Ok((state, moves_applied))
}

/// Replays `chain` and checks step budget, goal, and (for the optimization
/// puzzle) optimality against the oracle. Never panics on malformed input;
/// every failure is a reasoned verdict.
pub fn verify_chain(instance: &PuzzleInstance, chain: &Chain) -> Verdict {
    let (final_state, moves_applied) = match replay_chain(instance, chain) {
        Ok(ok) => ok,
        Err(ReplayError::Parse(msg)) => return Verdict::failed(FailureReason::ParseError, msg),
        Err(ReplayError::Illegal(msg)) => {
            return Verdict::failed(FailureReason::IllegalTransition, msg)
        }
    };

    match instance {
        PuzzleInstance::DropWater(i) => {
            if moves_applied > i.max_steps as usize {
                return Verdict::failed(
                    FailureReason::StepBudgetExceeded,
                    format!("{moves_applied} moves exceed the limit of {}", i.max_steps),
                );
            }
        }
        PuzzleInstance::NumberPath(i) => {
            if moves_applied > i.steps as usize {
                return Verdict::failed(
                    FailureReason::StepBudgetExceeded,
                    format!("{moves_applied} moves instead of exactly {}", i.steps),
                );
            }
        }
        _ => {}
    }

    if !is_goal(instance, &final_state, moves_applied) {
        return Verdict::failed(
            FailureReason::GoalNotMet,
            format!(
                "final state {} after {moves_applied} moves does not satisfy the goal",
                render_state(&final_state)
            ),
        );
    }

    if let (PuzzleInstance::MinimalGrass(i), PuzzleState::MinimalGrass(s)) =
        (instance, &final_state)
    {
        let achieved = s.grass_area().expect("goal state is fully assigned");
        let optimal = solve_minimal_grass(i).grass_area;
        if achieved > optimal {
            return Verdict::failed(
                FailureReason::NotOptimal,
                format!("grass area {achieved} but the optimum is {optimal}"),
            );
        }
    }

    Verdict::correct()
}

/// Scenario-line legality for lint: replay without goal/budget checks.
pub(super) fn replay_ok(instance: &PuzzleInstance, chain: &Chain) -> Result<(), String> {
    match replay_chain(instance, chain) {
        Ok(_) => Ok(()),
        Err(ReplayError::Parse(m)) | Err(ReplayError::Illegal(m)) => Err(m),
    }
}
