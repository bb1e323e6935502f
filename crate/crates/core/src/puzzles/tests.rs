use alloc::vec;

use proptest::prelude::*;

use super::*;
use crate::rational::Rational;

fn drop_water(cap_a: u32, cap_b: u32, target: u32, max_steps: u32) -> PuzzleInstance {
    PuzzleInstance::DropWater(DropWaterInstance {
        cap_a,
        cap_b,
        target,
        max_steps,
    })
}

fn arithmetic(numbers: [u32; 3], goal: u32) -> PuzzleInstance {
    PuzzleInstance::Arithmetic(ArithmeticInstance::new(numbers, goal))
}

#[test]
fn drop_water_legal_moves_include_all_six_tags() {
    let inst = drop_water(5, 3, 4, 6);
    let state = inst.initial_state();
    let moves = legal_moves(&inst, &state).unwrap();
    assert_eq!(moves.len(), 6);
    // from (0,0) only the two fills change the state
    let effective: Vec<_> = moves
        .iter()
        .filter(|m| !is_redundant(&inst, &state, m))
        .collect();
    assert_eq!(
        effective,
        vec![
            &Move::DropWater(DropWaterMove::FillA),
            &Move::DropWater(DropWaterMove::FillB)
        ]
    );
}

#[test]
fn pour_transfers_until_full_or_empty() {
    let inst = drop_water(6, 4, 2, 2);
    let full_a = PuzzleState::DropWater(DropWaterState {
        level_a: 6,
        level_b: 0,
    });
    let next = apply_move(&inst, &full_a, &Move::DropWater(DropWaterMove::PourAToB)).unwrap();
    assert_eq!(
        next,
        PuzzleState::DropWater(DropWaterState {
            level_a: 2,
            level_b: 4
        })
    );
}

#[test]
fn number_path_has_exactly_two_moves() {
    let inst = PuzzleInstance::NumberPath(NumberPathInstance {
        start: 5,
        goal: 9,
        steps: 4,
    });
    let state = inst.initial_state();
    let moves = legal_moves(&inst, &state).unwrap();
    assert_eq!(
        moves,
        vec![
            Move::NumberPath(NumberPathMove::Double),
            Move::NumberPath(NumberPathMove::AddOne)
        ]
    );
    let next = apply_move(&inst, &state, &Move::NumberPath(NumberPathMove::AddOne)).unwrap();
    assert_eq!(next, PuzzleState::NumberPath(NumberPathState { value: 6 }));
}

#[test]
fn arithmetic_moves_consume_operands() {
    let inst = arithmetic([2, 3, 10], 16);
    let state = inst.initial_state();
    let moves = legal_moves(&inst, &state).unwrap();
    let mul = Move::Arithmetic(ArithmeticMove {
        lhs: Rational::from_integer(2),
        rhs: Rational::from_integer(3),
        op: ArithOp::Mul,
    });
    assert!(moves.contains(&mul));
    let next = apply_move(&inst, &state, &mul).unwrap();
    assert_eq!(render_state(&next), "[6, 10]");
}

#[test]
fn arithmetic_rejects_missing_operand() {
    let inst = arithmetic([2, 3, 10], 16);
    let state = inst.initial_state();
    let bad = Move::Arithmetic(ArithmeticMove {
        lhs: Rational::from_integer(7),
        rhs: Rational::from_integer(3),
        op: ArithOp::Add,
    });
    assert!(apply_move(&inst, &state, &bad).is_err());
}

#[test]
fn arithmetic_excludes_division_by_zero() {
    let inst = arithmetic([1, 1, 2], 6);
    // reach a state containing 0: 1 - 1
    let state = inst.initial_state();
    let sub = Move::Arithmetic(ArithmeticMove {
        lhs: Rational::from_integer(1),
        rhs: Rational::from_integer(1),
        op: ArithOp::Sub,
    });
    let with_zero = apply_move(&inst, &state, &sub).unwrap();
    let moves = legal_moves(&inst, &with_zero).unwrap();
    for m in &moves {
        if let Move::Arithmetic(am) = m {
            assert!(
                !(am.op == ArithOp::Div && am.rhs == Rational::zero()),
                "division by zero offered"
            );
        }
    }
}

#[test]
fn goal_predicates() {
    // either bottle may hold the target
    let dw = drop_water(5, 3, 4, 6);
    let s = PuzzleState::DropWater(DropWaterState {
        level_a: 4,
        level_b: 1,
    });
    assert!(is_goal(&dw, &s, 3));
    assert!(!is_goal(&dw, &s, 7)); // over budget

    // number path requires exactly `steps` moves
    let np = PuzzleInstance::NumberPath(NumberPathInstance {
        start: 1,
        goal: 16,
        steps: 4,
    });
    let at_goal = PuzzleState::NumberPath(NumberPathState { value: 16 });
    assert!(is_goal(&np, &at_goal, 4));
    assert!(!is_goal(&np, &at_goal, 3));

    // arithmetic: single remaining value equal to the goal
    let ar = arithmetic([2, 3, 10], 16);
    let done = PuzzleState::Arithmetic(ArithmeticState {
        remaining: vec![Rational::from_integer(16)],
    });
    assert!(is_goal(&ar, &done, 2));
}

#[test]
fn state_rendering_matches_canonical_forms() {
    let ar = arithmetic([2, 3, 10], 16);
    assert_eq!(render_state(&ar.initial_state()), "[2, 3, 10]");
    let dw = drop_water(5, 3, 4, 6);
    assert_eq!(render_state(&dw.initial_state()), "[0, 0]");
    let mg = PuzzleInstance::MinimalGrass(MinimalGrassInstance { areas: [4, 4, 4] });
    assert_eq!(render_state(&mg.initial_state()), "[?, ?, ?]");
}

#[test]
fn parse_state_snaps_float_renderings() {
    let parsed = parse_state(PuzzleKind::Arithmetic, "[1.3333333333333335]").unwrap();
    assert_eq!(
        parsed,
        PuzzleState::Arithmetic(ArithmeticState {
            remaining: vec![Rational::new(4, 3)]
        })
    );
}

#[test]
fn parse_state_reports_offsets() {
    let e = parse_state(PuzzleKind::Arithmetic, "[2, x, 10]").unwrap_err();
    assert_eq!(e.offset, 3);
    assert!(parse_state(PuzzleKind::DropWater, "0, 0").is_err());
}

#[test]
fn arithmetic_multiset_is_order_insensitive() {
    assert_eq!(
        parse_state(PuzzleKind::Arithmetic, "[7, 1]").unwrap(),
        parse_state(PuzzleKind::Arithmetic, "[1, 7]").unwrap()
    );
}

#[test]
fn problem_statements_echo_parameters() {
    let ar = render_problem(&arithmetic([2, 3, 10], 16));
    assert!(ar.contains("2 3 10"));
    assert!(ar.contains("16"));
    let dw = render_problem(&drop_water(5, 3, 4, 6));
    for needle in ["5", "3", "4", "6"] {
        assert!(dw.contains(needle));
    }
    let mg = render_problem(&PuzzleInstance::MinimalGrass(MinimalGrassInstance {
        areas: [4, 4, 4],
    }));
    assert!(mg.contains("4, 4, and 4") || mg.matches('4').count() >= 3);
}

#[test]
fn divisor_pairs_cover_area() {
    assert_eq!(divisor_pairs(4), vec![(1, 4), (2, 2), (4, 1)]);
    assert_eq!(divisor_pairs(1), vec![(1, 1)]);
    assert_eq!(divisor_pairs(7), vec![(1, 7), (7, 1)]);
}

proptest! {
    // levels stay within capacity under any legal move sequence, and pouring
    // conserves total water
    #[test]
    fn drop_water_invariants(cap_a in 1u32..30, cap_b in 1u32..30, seq in proptest::collection::vec(0usize..6, 0..20)) {
        let inst = drop_water(cap_a, cap_b, 1, 30);
        let mut state = inst.initial_state();
        for pick in seq {
            let moves = legal_moves(&inst, &state)?;
            let mv = moves[pick % moves.len()].clone();
            let before = match &state {
                PuzzleState::DropWater(s) => (s.level_a, s.level_b),
                _ => unreachable!(),
            };
            state = apply_move(&inst, &state, &mv)?;
            let PuzzleState::DropWater(s) = &state else { unreachable!() };
            prop_assert!(s.level_a <= cap_a && s.level_b <= cap_b);
            if matches!(mv, Move::DropWater(DropWaterMove::PourAToB | DropWaterMove::PourBToA)) {
                prop_assert_eq!(s.level_a + s.level_b, before.0 + before.1);
            }
        }
    }

    // apply_move is pure: same inputs give the same output
    #[test]
    fn apply_move_is_pure(cap_a in 1u32..30, cap_b in 1u32..30, pick in 0usize..6) {
        let inst = drop_water(cap_a, cap_b, 1, 4);
        let state = inst.initial_state();
        let moves = legal_moves(&inst, &state).unwrap();
        let mv = &moves[pick % moves.len()];
        prop_assert_eq!(apply_move(&inst, &state, mv).unwrap(), apply_move(&inst, &state, mv).unwrap());
    }

    // the multiset shrinks by exactly one element per arithmetic move
    #[test]
    fn arithmetic_cardinality_decreases(nums in proptest::array::uniform3(1u32..13), goal in 1u32..25, picks in proptest::array::uniform2(0usize..64)) {
        let inst = arithmetic(nums, goal);
        let mut state = inst.initial_state();
        let mut expected_len = 3;
        for pick in picks {
            let moves = legal_moves(&inst, &state)?;
            prop_assert!(!moves.is_empty());
            state = apply_move(&inst, &state, &moves[pick % moves.len()])?;
            expected_len -= 1;
            let PuzzleState::Arithmetic(s) = &state else { unreachable!() };
            prop_assert_eq!(s.remaining.len(), expected_len);
        }
    }

    // parse . render = identity across kinds
    #[test]
    fn render_parse_round_trip_drop_water(a in 0u32..40, b in 0u32..40) {
        let s = PuzzleState::DropWater(DropWaterState { level_a: a, level_b: b });
        prop_assert_eq!(parse_state(PuzzleKind::DropWater, &render_state(&s)).unwrap(), s);
    }

    #[test]
    fn render_parse_round_trip_number_path(v in 0u64..10_000) {
        let s = PuzzleState::NumberPath(NumberPathState { value: v });
        prop_assert_eq!(parse_state(PuzzleKind::NumberPath, &render_state(&s)).unwrap(), s);
    }

    #[test]
    fn render_parse_round_trip_arithmetic(nums in proptest::collection::vec((-60i64..60, 1i64..13), 1..4)) {
        let mut remaining: Vec<Rational> = nums.into_iter().map(|(n, d)| Rational::new(n, d)).collect();
        remaining.sort();
        let s = PuzzleState::Arithmetic(ArithmeticState { remaining });
        prop_assert_eq!(parse_state(PuzzleKind::Arithmetic, &render_state(&s)).unwrap(), s);
    }

    #[test]
    fn render_parse_round_trip_grass(w1 in 1u32..16, h1 in 1u32..16, assigned in 0usize..4) {
        let mut dims = [None; 3];
        for slot in dims.iter_mut().take(assigned) {
            *slot = Some((w1, h1));
        }
        let s = PuzzleState::MinimalGrass(MinimalGrassState { dims });
        prop_assert_eq!(parse_state(PuzzleKind::MinimalGrass, &render_state(&s)).unwrap(), s);
    }
}
