//! Per-puzzle operation text grammar (parse and render).
//!
//! The accepted spellings are frozen in `fixtures/op_grammar.txt` and covered
//! by tests; bounded leniency keeps scoring reproducible. Rendering has two
//! styles: with the computed result (`2 * 3 = 6`, used by depth-first and
//! summary lines) and without (`2 * 3`, breadth-first scenario lines).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Chain, ChainLink};
use crate::puzzles::{
    render_state, parse_dims, ArithOp, ArithmeticMove, DropWaterMove, GrassMove, Move,
    MinimalGrassState, NumberPathMove, PuzzleKind, PuzzleState,
};
use crate::rational::Rational;

/// A parsed operation plus, for arithmetic, the result the text claims.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOp {
    pub mv: Move,
    pub claimed_result: Option<Rational>,
}

/// Parses operation text in the context of the state it applies to (the
/// state determines which building a dimension assignment targets).
pub fn parse_operation(
    kind: PuzzleKind,
    state: &PuzzleState,
    text: &str,
) -> Result<ParsedOp, String> {
    let text = text.trim().trim_end_matches('.').trim();
    match kind {
        PuzzleKind::DropWater => parse_drop_water_op(text).map(|m| ParsedOp {
            mv: Move::DropWater(m),
            claimed_result: None,
        }),
        PuzzleKind::NumberPath => parse_number_path_op(text).map(|m| ParsedOp {
            mv: Move::NumberPath(m),
            claimed_result: None,
        }),
        PuzzleKind::Arithmetic => parse_arithmetic_op(text).map(|(mv, claimed)| ParsedOp {
            mv: Move::Arithmetic(mv),
            claimed_result: claimed,
        }),
        PuzzleKind::MinimalGrass => {
            let (width, height) =
                parse_dims(text).ok_or_else(|| format!("expected 'w x h', got '{text}'"))?;
            let PuzzleState::MinimalGrass(MinimalGrassState { dims }) = state else {
                return Err("dimension assignment on a non-grass state".to_string());
            };
            let building = dims
                .iter()
                .position(Option::is_none)
                .ok_or_else(|| "all buildings already have dimensions".to_string())?
                as u8
                + 1;
            Ok(ParsedOp {
                mv: Move::MinimalGrass(GrassMove {
                    building,
                    width,
                    height,
                }),
                claimed_result: None,
            })
        }
    }
}

fn parse_drop_water_op(text: &str) -> Result<DropWaterMove, String> {
    let lower = text.to_ascii_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty() && !matches!(*w, "bottle" | "the" | "jug" | "water" | "from"))
        .map(|w| if w == "into" { "to" } else { w })
        .collect();
    match words.as_slice() {
        ["fill", "a"] => Ok(DropWaterMove::FillA),
        ["fill", "b"] => Ok(DropWaterMove::FillB),
        ["empty", "a"] => Ok(DropWaterMove::EmptyA),
        ["empty", "b"] => Ok(DropWaterMove::EmptyB),
        ["pour", "a", "to", "b"] => Ok(DropWaterMove::PourAToB),
        ["pour", "b", "to", "a"] => Ok(DropWaterMove::PourBToA),
        _ => Err(format!("unrecognized bottle operation '{text}'")),
    }
}

fn parse_number_path_op(text: &str) -> Result<NumberPathMove, String> {
    let compact: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_ascii_lowercase();
    match compact.as_str() {
        "x2" | "*2" | "×2" | "double" => Ok(NumberPathMove::Double),
        "+1" | "add1" | "addone" | "plus1" | "plusone" => Ok(NumberPathMove::AddOne),
        _ => Err(format!("unrecognized number operation '{text}'")),
    }
}

/// `<x> <op> <y>` with optional `= <z>`; operators `+ - * x × / ÷`.
fn parse_arithmetic_op(text: &str) -> Result<(ArithmeticMove, Option<Rational>), String> {
    let (lhs, rest) = take_number(text).ok_or_else(|| format!("expected a number in '{text}'"))?;
    let rest = rest.trim_start();
    let (op, rest) = take_operator(rest).ok_or_else(|| format!("expected an operator in '{text}'"))?;
    let rest = rest.trim_start();
    let (rhs, rest) = take_number(rest).ok_or_else(|| format!("expected a second number in '{text}'"))?;
    let rest = rest.trim_start();
    let claimed = match rest.strip_prefix('=') {
        Some(tail) => Some(
            Rational::parse_decimal(tail.trim())
                .ok_or_else(|| format!("bad result literal in '{text}'"))?,
        ),
        None if rest.is_empty() => None,
        None => return Err(format!("trailing junk in operation '{text}'")),
    };
    Ok((ArithmeticMove { lhs, rhs, op }, claimed))
}

fn take_number(s: &str) -> Option<(Rational, &str)> {
    let bytes = s.as_bytes();
    let mut end = 0;
    if end < bytes.len() && (bytes[end] == b'-' || bytes[end] == b'+') {
        end += 1;
    }
    let mut seen_digit = false;
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        seen_digit |= bytes[end].is_ascii_digit();
        end += 1;
    }
    if !seen_digit {
        return None;
    }
    Rational::parse_decimal(&s[..end]).map(|r| (r, &s[end..]))
}

fn take_operator(s: &str) -> Option<(ArithOp, &str)> {
    let mut chars = s.chars();
    let c = chars.next()?;
    let op = match c {
        '+' => ArithOp::Add,
        '-' | '−' => ArithOp::Sub,
        '*' | '×' | 'x' | 'X' => ArithOp::Mul,
        '/' | '÷' => ArithOp::Div,
        _ => return None,
    };
    Some((op, chars.as_str()))
}

/// How an operation renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpStyle {
    /// `2 * 3` (breadth-first scenario lines).
    Bare,
    /// `2 * 3 = 6` (depth-first lines, step lines, summaries).
    WithResult,
}

/// Canonical operation text.
pub fn render_operation(mv: &Move, style: OpStyle) -> String {
    match mv {
        Move::DropWater(m) => match m {
            DropWaterMove::FillA => "fill A".to_string(),
            DropWaterMove::FillB => "fill B".to_string(),
            DropWaterMove::EmptyA => "empty A".to_string(),
            DropWaterMove::EmptyB => "empty B".to_string(),
            DropWaterMove::PourAToB => "pour A to B".to_string(),
            DropWaterMove::PourBToA => "pour B to A".to_string(),
        },
        Move::NumberPath(m) => match m {
            NumberPathMove::Double => "x2".to_string(),
            NumberPathMove::AddOne => "+1".to_string(),
        },
        Move::Arithmetic(m) => {
            let base = format!("{} {} {}", m.lhs, m.op.symbol(), m.rhs);
            match (style, m.result()) {
                (OpStyle::WithResult, Some(result)) => format!("{base} = {result}"),
                _ => base,
            }
        }
        Move::MinimalGrass(m) => format!("{m}"),
    }
}

/// How a chain of states and operations renders as one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStyle {
    /// `[s0] -> (op = z) -> [s1]` (summaries and step lines).
    Summary,
    /// `[s0]->[s1]-> (op) [s2]` (breadth-first scenario lines: tight recap
    /// arrows, bare operation, no arrow before the new state).
    Scenario,
    /// `[s0] -> [s1] -> (op = z) [s2]` (depth-first attempt lines).
    DfsPath,
}

/// Renders the path `states[0] .. states[k]` with `ops` applied between
/// consecutive states. For [`ChainStyle::Scenario`] and
/// [`ChainStyle::DfsPath`] only the final transition shows its operation;
/// recap transitions render as bare states.
pub fn render_chain(states: &[PuzzleState], ops: &[Move], style: ChainStyle) -> String {
    debug_assert_eq!(states.len(), ops.len() + 1);
    let mut out = String::new();
    match style {
        ChainStyle::Summary => {
            out.push_str(&render_state(&states[0]));
            for (mv, state) in ops.iter().zip(&states[1..]) {
                out.push_str(" -> (");
                out.push_str(&render_operation(mv, OpStyle::WithResult));
                out.push_str(") -> ");
                out.push_str(&render_state(state));
            }
        }
        ChainStyle::Scenario => {
            for state in &states[..states.len() - 1] {
                out.push_str(&render_state(state));
                out.push_str("->");
            }
            out.push_str(" (");
            out.push_str(&render_operation(
                ops.last().expect("scenario chain has a move"),
                OpStyle::Bare,
            ));
            out.push_str(") ");
            out.push_str(&render_state(states.last().unwrap()));
        }
        ChainStyle::DfsPath => {
            for state in &states[..states.len() - 1] {
                out.push_str(&render_state(state));
                out.push_str(" -> ");
            }
            out.push('(');
            out.push_str(&render_operation(
                ops.last().expect("path chain has a move"),
                OpStyle::WithResult,
            ));
            out.push_str(") ");
            out.push_str(&render_state(states.last().unwrap()));
        }
    }
    out
}

/// Builds the [`Chain`] structure a rendered summary would parse to; used by
/// tests and the flatten transform.
pub fn chain_of_plan(states: &[PuzzleState], ops: &[Move]) -> Chain {
    Chain {
        initial: render_state(&states[0]),
        links: ops
            .iter()
            .zip(&states[1..])
            .map(|(mv, state)| ChainLink {
                operation: Some(render_operation(mv, OpStyle::WithResult)),
                state: Some(render_state(state)),
            })
            .collect(),
    }
}
