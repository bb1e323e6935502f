//! Canonical text rendering and parsing of puzzle states.
//!
//! States render as bracketed comma-separated lists, e.g. `[2, 3, 10]` or
//! `[0, 0]`. Parsing is the inverse; arithmetic values go through the
//! decimal-snapping rules in [`crate::rational`], and the multiset is stored
//! sorted so `[7, 1]` and `[1, 7]` parse to the same state.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{
    ArithmeticState, DropWaterState, MinimalGrassState, NumberPathState, PuzzleKind, PuzzleState,
};
use crate::rational::Rational;

/// Parse failure with the byte offset of the offending input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("state parse error at byte {offset}: {message}")]
pub struct StateParseError {
    pub offset: usize,
    pub message: String,
}

fn err(offset: usize, message: impl Into<String>) -> StateParseError {
    StateParseError {
        offset,
        message: message.into(),
    }
}

/// Renders a state in its canonical bracketed form.
pub fn render_state(state: &PuzzleState) -> String {
    match state {
        PuzzleState::DropWater(s) => format!("[{}, {}]", s.level_a, s.level_b),
        PuzzleState::NumberPath(s) => format!("[{}]", s.value),
        PuzzleState::Arithmetic(s) => {
            let parts: Vec<String> = s.remaining.iter().map(Rational::render).collect();
            format!("[{}]", parts.join(", "))
        }
        PuzzleState::MinimalGrass(s) => s.render(),
    }
}

/// Parses the canonical bracketed form back into a state.
///
/// Round trip: `parse_state(kind, render_state(s)) == s` for every valid
/// state of that kind.
pub fn parse_state(kind: PuzzleKind, text: &str) -> Result<PuzzleState, StateParseError> {
    let trimmed = text.trim();
    let base = text.len() - text.trim_start().len();
    let inner = trimmed
        .strip_prefix('[')
        .ok_or_else(|| err(base, "expected '['"))?;
    let inner = inner
        .strip_suffix(']')
        .ok_or_else(|| err(base + trimmed.len(), "expected ']'"))?;
    // offsets of each comma-separated field within `text`
    let fields: Vec<(usize, &str)> = split_fields(inner, base + 1);

    match kind {
        PuzzleKind::DropWater => {
            if fields.len() != 2 {
                return Err(err(base, format!("expected 2 levels, got {}", fields.len())));
            }
            let level_a = parse_u32(fields[0])?;
            let level_b = parse_u32(fields[1])?;
            Ok(PuzzleState::DropWater(DropWaterState { level_a, level_b }))
        }
        PuzzleKind::NumberPath => {
            if fields.len() != 1 {
                return Err(err(base, format!("expected 1 value, got {}", fields.len())));
            }
            let (off, raw) = fields[0];
            let value: u64 = raw
                .trim()
                .parse()
                .map_err(|_| err(off, format!("invalid number '{}'", raw.trim())))?;
            Ok(PuzzleState::NumberPath(NumberPathState { value }))
        }
        PuzzleKind::Arithmetic => {
            if fields.is_empty() || fields.len() > 3 {
                return Err(err(base, format!("expected 1-3 values, got {}", fields.len())));
            }
            let mut remaining = Vec::with_capacity(fields.len());
            for (off, raw) in fields {
                let v = Rational::parse_decimal(raw)
                    .ok_or_else(|| err(off, format!("invalid number '{}'", raw.trim())))?;
                remaining.push(v);
            }
            remaining.sort();
            Ok(PuzzleState::Arithmetic(ArithmeticState { remaining }))
        }
        PuzzleKind::MinimalGrass => {
            if fields.len() != 3 {
                return Err(err(base, format!("expected 3 entries, got {}", fields.len())));
            }
            let mut dims = [None; 3];
            for (slot, (off, raw)) in fields.into_iter().enumerate() {
                let raw = raw.trim();
                if raw == "?" {
                    continue;
                }
                dims[slot] = Some(parse_dims(raw).ok_or_else(|| {
                    err(off, format!("expected '?' or 'w x h', got '{raw}'"))
                })?);
            }
            Ok(PuzzleState::MinimalGrass(MinimalGrassState { dims }))
        }
    }
}

/// Parses `w x h` (also `w * h`, `w × h`).
pub fn parse_dims(raw: &str) -> Option<(u32, u32)> {
    let raw = raw.trim();
    for sep in ["x", "X", "*", "×"] {
        if let Some((w, h)) = raw.split_once(sep) {
            let w: u32 = w.trim().parse().ok()?;
            let h: u32 = h.trim().parse().ok()?;
            if w > 0 && h > 0 {
                return Some((w, h));
            }
            return None;
        }
    }
    None
}

fn split_fields(inner: &str, base: usize) -> Vec<(usize, &str)> {
    let mut fields = Vec::new();
    let mut start = 0;
    for (i, b) in inner.bytes().enumerate() {
        if b == b',' {
            fields.push((base + start, &inner[start..i]));
            start = i + 1;
        }
    }
    if start < inner.len() || !inner.is_empty() {
        fields.push((base + start, &inner[start..]));
    }
    fields.retain(|(_, f)| !f.trim().is_empty());
    fields
}

fn parse_u32((off, raw): (usize, &str)) -> Result<u32, StateParseError> {
    raw.trim()
        .parse()
        .map_err(|_| err(off, format!("invalid number '{}'", raw.trim())))
}
