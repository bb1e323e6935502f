use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::puzzles::{
    ArithmeticInstance, DropWaterInstance, MinimalGrassInstance, NumberPathInstance, PuzzleKind,
};

pub(crate) const BFS_FIXTURE: &str = include_str!("../../fixtures/example_bfs_arithmetic.txt");
pub(crate) const DFS_FIXTURE: &str = include_str!("../../fixtures/example_dfs_arithmetic.txt");
pub(crate) const COT_FIXTURE: &str = include_str!("../../fixtures/example_cot_arithmetic.txt");
pub(crate) const TOT_FLAT_FIXTURE: &str =
    include_str!("../../fixtures/example_tot_flat_arithmetic.txt");

fn arith_2_3_10_16() -> PuzzleInstance {
    PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 16))
}

fn arith_1_1_7_8() -> PuzzleInstance {
    PuzzleInstance::Arithmetic(ArithmeticInstance::new([1, 1, 7], 8))
}

#[test]
fn bfs_fixture_parses_cleanly() {
    let instance = arith_2_3_10_16();
    let trace = parse_trace(BFS_FIXTURE, TraceFormat::Bfs, instance.kind());
    assert_eq!(trace.steps.len(), 2);
    let scenario_counts: Vec<usize> = trace
        .steps
        .iter()
        .map(|b| {
            b.items
                .iter()
                .filter(|i| matches!(i, BlockItem::Scenario(_)))
                .count()
        })
        .collect();
    assert_eq!(scenario_counts, alloc::vec![6, 12]);
    let summary = trace.summary.as_ref().expect("summary present");
    assert_eq!(summary.move_count(), 2);
    assert!(trace.diagnostics.is_empty(), "{:?}", trace.diagnostics);
    assert!(lint_structure(&trace, &instance).is_empty());
    assert!(score_response(&instance, BFS_FIXTURE, TraceFormat::Bfs).correct);
}

#[test]
fn dfs_fixture_parses_cleanly() {
    let instance = arith_1_1_7_8();
    let trace = parse_trace(DFS_FIXTURE, TraceFormat::Dfs, instance.kind());
    let backtracks = trace
        .steps
        .iter()
        .flat_map(|b| b.items.iter())
        .filter(|i| matches!(i, BlockItem::Backtrack(_)))
        .count();
    assert_eq!(backtracks, 3);
    assert!(trace.steps.iter().any(|b| b.number == 1 && b.revised));
    assert!(trace.steps.iter().any(|b| b.number == 2 && b.revised));
    assert!(trace.diagnostics.is_empty(), "{:?}", trace.diagnostics);
    assert!(lint_structure(&trace, &instance).is_empty());
    assert!(score_response(&instance, DFS_FIXTURE, TraceFormat::Dfs).correct);
}

#[test]
fn cot_fixture_scores_correct() {
    let instance = arith_2_3_10_16();
    let trace = parse_trace(COT_FIXTURE, TraceFormat::Cot, instance.kind());
    assert!(trace.summary.is_some());
    assert!(trace.diagnostics.is_empty());
    assert!(score_response(&instance, COT_FIXTURE, TraceFormat::Cot).correct);
}

#[test]
fn tot_flat_fixture_round_structure() {
    let instance = arith_2_3_10_16();
    let trace = parse_trace(TOT_FLAT_FIXTURE, TraceFormat::TotFlat, instance.kind());
    let flat = trace.flat.as_ref().expect("flat episode");
    assert_eq!(flat.input_line.as_deref(), Some("2 3 10 16"));
    assert_eq!(flat.rounds.len(), 2);

    let r0 = &flat.rounds[0];
    assert_eq!(r0.current.len(), 1);
    assert_eq!(r0.proposals.len(), 4);
    let values: Vec<Option<f64>> = r0.proposals.iter().map(|(_, v)| *v).collect();
    assert_eq!(
        values,
        alloc::vec![Some(0.0), Some(100.0), Some(23.3), Some(0.0)]
    );
    assert_eq!(r0.chosen.len(), 2);

    let r1 = &flat.rounds[1];
    assert_eq!(r1.current.len(), 2);
    assert_eq!(r1.proposals.len(), 7);
    assert_eq!(r1.chosen.len(), 2);
    // second-round proposals are two-move chains stitched from segments
    assert_eq!(r1.proposals[0].0.move_count(), 2);

    assert!(score_response(&instance, TOT_FLAT_FIXTURE, TraceFormat::TotFlat).correct);
}

#[test]
fn empty_text_yields_empty_trace() {
    let trace = parse_trace("", TraceFormat::Bfs, PuzzleKind::Arithmetic);
    assert!(trace.steps.is_empty());
    assert!(trace.summary.is_none());
    assert_eq!(trace.diagnostics.len(), 1);
    let verdict = score_response(&arith_2_3_10_16(), "", TraceFormat::Bfs);
    assert!(!verdict.correct);
    assert_eq!(verdict.failure_reason, Some(FailureReason::NoSummary));
}

#[test]
fn noise_scores_no_summary() {
    let verdict = score_response(
        &arith_2_3_10_16(),
        "I'm sorry, I cannot solve puzzles today.",
        TraceFormat::Cot,
    );
    assert_eq!(verdict.failure_reason, Some(FailureReason::NoSummary));
}

#[test]
fn wrong_goal_is_goal_not_met() {
    // the correct chain for goal 16 scored against goal 15
    let instance = PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 15));
    let verdict = score_response(&instance, BFS_FIXTURE, TraceFormat::Bfs);
    assert!(!verdict.correct);
    assert_eq!(verdict.failure_reason, Some(FailureReason::GoalNotMet));
}

#[test]
fn perturbed_intermediate_state_is_illegal_transition() {
    let instance = arith_2_3_10_16();
    let text = "Summary: [2, 3, 10] -> (2 * 3 = 6) -> [7, 10] -> (6 + 10 = 16) -> [16]";
    let verdict = score_response(&instance, text, TraceFormat::Cot);
    assert_eq!(verdict.failure_reason, Some(FailureReason::IllegalTransition));
}

#[test]
fn claimed_result_must_match_computation() {
    let instance = arith_2_3_10_16();
    let text = "Summary: [2, 3, 10] -> (2 * 3 = 7) -> [6, 10] -> (6 + 10 = 16) -> [16]";
    let verdict = score_response(&instance, text, TraceFormat::Cot);
    assert_eq!(verdict.failure_reason, Some(FailureReason::IllegalTransition));
}

#[test]
fn step_budget_is_enforced() {
    let instance = PuzzleInstance::DropWater(DropWaterInstance {
        cap_a: 5,
        cap_b: 3,
        target: 3,
        max_steps: 1,
    });
    let text = "Summary: [0, 0] -> (fill A) -> [5, 0] -> (pour A to B) -> [2, 3]";
    let verdict = score_response(&instance, text, TraceFormat::Cot);
    assert_eq!(
        verdict.failure_reason,
        Some(FailureReason::StepBudgetExceeded)
    );
    // within budget the same target is fine
    let ok = "Summary: [0, 0] -> (fill B) -> [0, 3]";
    assert!(score_response(&instance, ok, TraceFormat::Cot).correct);
}

#[test]
fn number_path_requires_exact_step_count() {
    let instance = PuzzleInstance::NumberPath(NumberPathInstance {
        start: 1,
        goal: 8,
        steps: 4,
    });
    // reaches 8 in three moves: too few
    let short = "Summary: [1] -> (x2) -> [2] -> (x2) -> [4] -> (x2) -> [8]";
    let verdict = score_response(&instance, short, TraceFormat::Cot);
    assert_eq!(verdict.failure_reason, Some(FailureReason::GoalNotMet));
    // 1 -> 2 -> 3 -> 4 -> 8: exactly four
    let exact = "Summary: [1] -> (+1) -> [2] -> (+1) -> [3] -> (+1) -> [4] -> (x2) -> [8]";
    assert!(score_response(&instance, exact, TraceFormat::Cot).correct);
}

#[test]
fn suboptimal_grass_is_not_optimal() {
    let instance = PuzzleInstance::MinimalGrass(MinimalGrassInstance { areas: [4, 4, 4] });
    let optimal = "Summary: [?, ?, ?] -> (1 x 4) -> [1 x 4, ?, ?] -> (1 x 4) -> [1 x 4, 1 x 4, ?] -> (1 x 4) -> [1 x 4, 1 x 4, 1 x 4]";
    assert!(score_response(&instance, optimal, TraceFormat::Cot).correct);
    // mixing orientations inflates the bounding box
    let suboptimal = "Summary: [?, ?, ?] -> (1 x 4) -> [1 x 4, ?, ?] -> (4 x 1) -> [1 x 4, 4 x 1, ?] -> (2 x 2) -> [1 x 4, 4 x 1, 2 x 2]";
    let verdict = score_response(&instance, suboptimal, TraceFormat::Cot);
    assert_eq!(verdict.failure_reason, Some(FailureReason::NotOptimal));
}

#[test]
fn redundant_moves_count_toward_budget() {
    let instance = PuzzleInstance::DropWater(DropWaterInstance {
        cap_a: 5,
        cap_b: 3,
        target: 3,
        max_steps: 2,
    });
    // fill B twice: the second is a no-op but still a move; budget 2 holds
    let text = "Summary: [0, 0] -> (fill B) -> [0, 3] -> (fill B) -> [0, 3]";
    assert!(score_response(&instance, text, TraceFormat::Cot).correct);
}

#[test]
fn dfs_fallback_scores_final_path_without_summary() {
    let instance = arith_1_1_7_8();
    // D.2 with its summary line removed still ends on the goal path
    let without_summary: String = DFS_FIXTURE
        .lines()
        .filter(|l| !l.trim_start().starts_with("Summary"))
        .collect::<Vec<_>>()
        .join("\n");
    assert!(score_response(&instance, &without_summary, TraceFormat::Dfs).correct);
}

#[test]
fn bfs_fallback_finds_deepest_goal_scenario() {
    let instance = arith_2_3_10_16();
    let without_summary: String = BFS_FIXTURE
        .lines()
        .filter(|l| !l.trim_start().starts_with("Summary"))
        .collect::<Vec<_>>()
        .join("\n");
    assert!(score_response(&instance, &without_summary, TraceFormat::Bfs).correct);
}

#[test]
fn format_independence_of_summary_chains() {
    let instance = arith_2_3_10_16();
    let summary = "Summary: [2, 3, 10] -> (2 * 3 = 6) -> [6, 10] -> (6 + 10 = 16) -> [16]";
    for format in [TraceFormat::Bfs, TraceFormat::Dfs, TraceFormat::Cot] {
        assert!(score_response(&instance, summary, format).correct);
    }
}

#[test]
fn lint_flags_orphan_scenarios() {
    let instance = arith_2_3_10_16();
    let text = "Step 1\nscenario 1, [2, 3, 10]-> (2 * 3) [6, 10]\n\nStep 2\nscenario 2.1, [2, 3, 10]->[12, 3]-> (12 + 3) [15]\n";
    let trace = parse_trace(text, TraceFormat::Bfs, instance.kind());
    let issues = lint_structure(&trace, &instance);
    assert!(issues.iter().any(|i| i.kind == IssueKind::OrphanParent));
}

#[test]
fn lint_flags_dangling_backtracks() {
    let instance = arith_1_1_7_8();
    let text = "Step 1\n[1, 1, 7] -> (1 + 1 = 2) [2, 7]\n\nLet's step back. Now it is [3, 7].\n";
    let trace = parse_trace(text, TraceFormat::Dfs, instance.kind());
    let issues = lint_structure(&trace, &instance);
    assert!(issues.iter().any(|i| i.kind == IssueKind::DanglingBacktrack));
}

#[test]
fn lint_flags_illegal_scenario_transitions() {
    let instance = arith_2_3_10_16();
    let text = "Step 1\nscenario 1, [2, 3, 10]-> (2 * 3) [9, 10]\n";
    let trace = parse_trace(text, TraceFormat::Bfs, instance.kind());
    let issues = lint_structure(&trace, &instance);
    assert!(issues.iter().any(|i| i.kind == IssueKind::IllegalTransition));
}

#[test]
fn float_rendered_states_verify_exactly() {
    // a chain through a non-integer intermediate, rendered float-style
    let instance = PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 12));
    let text = "Summary: [2, 3, 10] -> (10 / 3 = 3.3333333333333335) -> [2, 3.3333333333333335]";
    // not the goal, but the transition itself must replay exactly
    let verdict = score_response(&instance, text, TraceFormat::Cot);
    assert_eq!(verdict.failure_reason, Some(FailureReason::GoalNotMet));
}

proptest! {
    // parse totality: arbitrary input never panics
    #[test]
    fn parse_is_total(text in ".{0,300}", fmt in 0usize..4) {
        let format = [TraceFormat::Bfs, TraceFormat::Dfs, TraceFormat::Cot, TraceFormat::TotFlat][fmt];
        let _ = parse_trace(&text, format, PuzzleKind::Arithmetic);
    }

    // scoring soundness: every oracle plan rendered as a summary verifies
    #[test]
    fn oracle_plans_score_correct(nums in proptest::array::uniform3(1u32..13), goal_pick in 0usize..6) {
        let goal = crate::datasets::ARITHMETIC_GOALS[goal_pick];
        let instance = PuzzleInstance::Arithmetic(ArithmeticInstance::new(nums, goal));
        if let Some(plan) = crate::oracle::solve(&instance) {
            let text = format!(
                "Summary: {}",
                render_chain(&plan.states, &plan.moves, ChainStyle::Summary)
            );
            let verdict = score_response(&instance, &text, TraceFormat::Cot);
            prop_assert!(verdict.correct, "{:?} on {}", verdict, text);
        }
    }

    // scoring strictness: perturbing any single state flips the verdict
    #[test]
    fn single_state_mutations_flip_verdict(which in 0usize..3, bump in 1u32..50) {
        let instance = arith_2_3_10_16();
        let states = [
            alloc::vec![2 , 3, 10],
            alloc::vec![6, 10],
            alloc::vec![16],
        ];
        let render = |idx: usize| -> String {
            let mut vals = states[idx].clone();
            if idx == which {
                vals[0] += bump;
            }
            let parts: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            format!("[{}]", parts.join(", "))
        };
        let text = format!(
            "Summary: {} -> (2 * 3 = 6) -> {} -> (6 + 10 = 16) -> {}",
            render(0), render(1), render(2),
        );
        let verdict = score_response(&instance, &text, TraceFormat::Cot);
        prop_assert!(!verdict.correct, "mutation {which} not caught: {text}");
    }
}
