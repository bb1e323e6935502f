//! Total, best-effort parsing of response text into trace structure.
//!
//! Nothing here fails: unrecognized lines become diagnostics. Line grammar:
//! step headers `Step <k>` with optional `(revised)`; `scenario <dotted>,
//! <chain>` lines; bare arrow chains `[s] -> (op) [s']` with the arrow after
//! the operation optional; backtrack markers matched case-insensitively on
//! "step back" followed by "Now it is [state]"; a summary line beginning
//! `Summary`, with the chain on the same or the following line.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    BacktrackMarker, BlockItem, Chain, ChainLink, Diagnostic, FlatEpisode, FlatRound, PathLine,
    ScenarioLine, StepBlock, Trace, TraceFormat,
};
use crate::puzzles::PuzzleKind;

/// Parses arbitrary text into a [`Trace`]. Total: any byte input yields a
/// trace, possibly with zero steps and diagnostics only.
pub fn parse_trace(text: &str, format: TraceFormat, _kind: PuzzleKind) -> Trace {
    let mut trace = Trace {
        format,
        preamble: Vec::new(),
        steps: Vec::new(),
        summary: None,
        flat: None,
        diagnostics: Vec::new(),
    };
    if matches!(format, TraceFormat::TotFlat) {
        let episode = parse_flat_episode(text, &mut trace.diagnostics);
        trace.summary = episode.summary.clone();
        trace.flat = Some(episode);
        return trace;
    }

    let mut expecting_summary_chain = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }

        if expecting_summary_chain {
            expecting_summary_chain = false;
            if line.starts_with('[') {
                match parse_arrow_chain(line) {
                    Ok(chain) => {
                        trace.summary = Some(chain);
                        continue;
                    }
                    Err(msg) => {
                        trace.diagnostics.push(Diagnostic {
                            line: line_no,
                            message: format!("summary chain: {msg}"),
                        });
                        continue;
                    }
                }
            }
            // fall through: the line was not a chain, classify it normally
        }

        if let Some((number, revised)) = parse_step_header(line) {
            trace.steps.push(StepBlock {
                number,
                revised,
                items: Vec::new(),
                line: line_no,
            });
            continue;
        }

        if let Some(rest) = strip_prefix_ci(line, "summary") {
            let rest = rest.trim_start_matches(':').trim();
            if rest.is_empty() {
                expecting_summary_chain = true;
            } else {
                match parse_arrow_chain(rest) {
                    Ok(chain) => trace.summary = Some(chain),
                    Err(msg) => trace.diagnostics.push(Diagnostic {
                        line: line_no,
                        message: format!("summary chain: {msg}"),
                    }),
                }
            }
            continue;
        }

        if contains_ci(line, "step back") {
            match find_resumed_state(line) {
                Some(state) => push_item(
                    &mut trace,
                    BlockItem::Backtrack(BacktrackMarker {
                        resumed_state: state,
                        line: line_no,
                    }),
                ),
                None => trace.diagnostics.push(Diagnostic {
                    line: line_no,
                    message: "backtrack without a resumed state".to_string(),
                }),
            }
            continue;
        }

        if let Some(rest) = strip_prefix_ci(line, "scenario") {
            match parse_scenario_rest(rest, line_no) {
                Ok(s) => push_item(&mut trace, BlockItem::Scenario(s)),
                Err(msg) => trace.diagnostics.push(Diagnostic {
                    line: line_no,
                    message: msg,
                }),
            }
            continue;
        }

        if line.starts_with('[') {
            match parse_arrow_chain(line) {
                Ok(chain) => push_item(
                    &mut trace,
                    BlockItem::Path(PathLine {
                        chain,
                        line: line_no,
                    }),
                ),
                Err(msg) => trace.diagnostics.push(Diagnostic {
                    line: line_no,
                    message: msg,
                }),
            }
            continue;
        }

        trace.diagnostics.push(Diagnostic {
            line: line_no,
            message: format!("unrecognized line: {}", truncate(line, 60)),
        });
    }

    if trace.steps.is_empty() && trace.summary.is_none() && trace.preamble.is_empty() {
        trace.diagnostics.push(Diagnostic {
            line: 0,
            message: "no recognizable trace content".to_string(),
        });
    }
    trace
}

fn push_item(trace: &mut Trace, item: BlockItem) {
    match trace.steps.last_mut() {
        Some(block) => block.items.push(item),
        None => trace.preamble.push(item),
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

/// `Step 3`, `Step 3 (revised)`, `# step = 2`.
fn parse_step_header(line: &str) -> Option<(u32, bool)> {
    let rest = line.strip_prefix('#').map(str::trim_start).unwrap_or(line);
    let rest = strip_prefix_ci(rest, "step")?;
    let rest = rest.trim_start().strip_prefix('=').unwrap_or(rest).trim();
    let digits_end = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
    if digits_end == 0 {
        return None;
    }
    let number: u32 = rest[..digits_end].parse().ok()?;
    let tail = rest[digits_end..].trim();
    if tail.is_empty() {
        return Some((number, false));
    }
    let revised = tail
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .map(|t| t.trim().eq_ignore_ascii_case("revised"))
        .unwrap_or(false);
    revised.then_some((number, true))
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    if s.len() >= prefix.len()
        && s.is_char_boundary(prefix.len())
        && s[..prefix.len()].eq_ignore_ascii_case(prefix)
    {
        Some(&s[prefix.len()..])
    } else {
        None
    }
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() || haystack.len() < needle.len() {
        return false;
    }
    (0..=haystack.len() - needle.len())
        .any(|i| haystack.is_char_boundary(i) && strip_prefix_ci(&haystack[i..], needle).is_some())
}

/// Finds the state after "now it is" (case-insensitive).
fn find_resumed_state(line: &str) -> Option<String> {
    let lower_pos = (0..line.len()).find(|&i| {
        line.is_char_boundary(i) && strip_prefix_ci(&line[i..], "now it is").is_some()
    })?;
    let after = &line[lower_pos + "now it is".len()..];
    let open = after.find('[')?;
    let close = after[open..].find(']')? + open;
    Some(after[open..=close].to_string())
}

/// `1.1.2, [chain...]` (the part after the `scenario` keyword).
fn parse_scenario_rest(rest: &str, line_no: usize) -> Result<ScenarioLine, String> {
    let rest = rest.trim_start();
    let id_end = rest
        .bytes()
        .take_while(|b| b.is_ascii_digit() || *b == b'.')
        .count();
    if id_end == 0 {
        return Err("scenario line without an id".to_string());
    }
    let id: Result<Vec<u32>, _> = rest[..id_end]
        .trim_matches('.')
        .split('.')
        .map(str::parse)
        .collect();
    let id = id.map_err(|_| format!("bad scenario id '{}'", &rest[..id_end]))?;
    let after = rest[id_end..].trim_start().trim_start_matches([',', ':']).trim_start();
    let chain = parse_arrow_chain(after)?;
    Ok(ScenarioLine {
        id,
        chain,
        line: line_no,
    })
}

#[derive(Debug)]
enum Token {
    State(String),
    Op(String),
}

fn tokenize_arrow_line(line: &str) -> Vec<Token> {
    let bytes = line.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'[' => {
                let end = line[i..].find(']').map(|e| i + e);
                match end {
                    Some(e) => {
                        tokens.push(Token::State(line[i..=e].to_string()));
                        i = e + 1;
                    }
                    None => break, // unterminated state; ignore the tail
                }
            }
            b'(' => {
                // allow one level of nesting inside operation text
                let mut depth = 0usize;
                let mut end = None;
                for (j, b) in line[i..].bytes().enumerate() {
                    match b {
                        b'(' => depth += 1,
                        b')' => {
                            depth -= 1;
                            if depth == 0 {
                                end = Some(i + j);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                match end {
                    Some(e) => {
                        tokens.push(Token::Op(line[i + 1..e].trim().to_string()));
                        i = e + 1;
                    }
                    None => break,
                }
            }
            _ => i += 1,
        }
    }
    tokens
}

/// Parses `[s0] -> (op) [s1] -> ...` into a [`Chain`]. The arrow after an
/// operation is optional, arrows carry arbitrary spacing, and a line may end
/// on a dangling operation.
pub(super) fn parse_arrow_chain(line: &str) -> Result<Chain, String> {
    let tokens = tokenize_arrow_line(line);
    let mut iter = tokens.into_iter();
    let initial = match iter.next() {
        Some(Token::State(s)) => s,
        Some(Token::Op(_)) => return Err("chain starts with an operation".to_string()),
        None => return Err("no states on line".to_string()),
    };
    let mut links: Vec<ChainLink> = Vec::new();
    let mut pending_op: Option<String> = None;
    for token in iter {
        match token {
            Token::State(s) => links.push(ChainLink {
                operation: pending_op.take(),
                state: Some(s),
            }),
            Token::Op(o) => {
                if pending_op.is_some() {
                    return Err("two operations without a state between them".to_string());
                }
                pending_op = Some(o);
            }
        }
    }
    if let Some(op) = pending_op {
        links.push(ChainLink {
            operation: Some(op),
            state: None,
        });
    }
    Ok(Chain { initial, links })
}

/// Parses the flattened multi-round episode format:
/// `# step = r` blocks with "The current states are:", "From these states,
/// we can achieve these new states:" (each proposal carrying a
/// `(value = v)`), "Then we choose the new states with largest values:",
/// and a final `# Summary` block.
pub fn parse_flat_episode(text: &str, diagnostics: &mut Vec<Diagnostic>) -> FlatEpisode {
    #[derive(PartialEq)]
    enum Section {
        None,
        Current,
        Proposals,
        Chosen,
        Summary,
    }
    let mut episode = FlatEpisode::default();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((number, _)) = parse_step_header(line) {
            if is_summary_header(line) {
                section = Section::Summary;
            } else {
                episode.rounds.push(FlatRound {
                    index: number,
                    current: Vec::new(),
                    proposals: Vec::new(),
                    chosen: Vec::new(),
                });
                section = Section::None;
            }
            continue;
        }
        if is_summary_header(line) {
            section = Section::Summary;
            continue;
        }
        if let Some(rest) = strip_prefix_ci(line, "the input is") {
            if episode.input_line.is_none() {
                episode.input_line = Some(rest.trim().to_string());
            }
            continue;
        }
        if strip_prefix_ci(line, "the current states are").is_some() {
            section = Section::Current;
            continue;
        }
        if strip_prefix_ci(line, "from these states").is_some() {
            section = Section::Proposals;
            continue;
        }
        if strip_prefix_ci(line, "then we choose").is_some() {
            section = Section::Chosen;
            continue;
        }
        if !line.starts_with('[') {
            diagnostics.push(Diagnostic {
                line: line_no,
                message: format!("unrecognized line: {}", truncate(line, 60)),
            });
            continue;
        }

        let (chain_text, value) = split_value_suffix(line);
        match parse_flat_chain(&chain_text) {
            Ok(chain) => {
                let round = episode.rounds.last_mut();
                match section {
                    Section::Current => {
                        if let Some(r) = round {
                            r.current.push(chain);
                        }
                    }
                    Section::Proposals => {
                        if let Some(r) = round {
                            r.proposals.push((chain, value));
                        }
                    }
                    Section::Chosen => {
                        if let Some(r) = round {
                            r.chosen.push(chain);
                        }
                    }
                    Section::Summary => episode.summary = Some(chain),
                    Section::None => diagnostics.push(Diagnostic {
                        line: line_no,
                        message: "chain outside any section".to_string(),
                    }),
                }
            }
            Err(msg) => diagnostics.push(Diagnostic {
                line: line_no,
                message: msg,
            }),
        }
    }
    episode
}

fn is_summary_header(line: &str) -> bool {
    let rest = line.strip_prefix('#').map(str::trim_start).unwrap_or(line);
    strip_prefix_ci(rest, "summary")
        .map(|r| r.trim_start_matches(':').trim().is_empty())
        .unwrap_or(false)
}

/// Splits a trailing `(value = v)` annotation off a proposal line.
fn split_value_suffix(line: &str) -> (String, Option<f64>) {
    let lower = line.to_ascii_lowercase();
    if let Some(pos) = lower.rfind("(value") {
        let tail = &line[pos..];
        if let Some(eq) = tail.find('=') {
            let inner = tail[eq + 1..].trim_end().trim_end_matches(')').trim();
            if let Ok(v) = inner.parse::<f64>() {
                return (line[..pos].to_string(), Some(v));
            }
        }
    }
    (line.to_string(), None)
}

/// Parses a flat-format chain: segments separated by the literal two-byte
/// sequence `\n`, each an arrow line, stitched end to end. Stray quote and
/// comma junk around segments is ignored.
fn parse_flat_chain(text: &str) -> Result<Chain, String> {
    let mut chain: Option<Chain> = None;
    for segment in text.split("\\n") {
        let segment = segment.trim().trim_matches(['"', ',', ' ']);
        if segment.is_empty() {
            continue;
        }
        let part = parse_arrow_chain(segment)?;
        match &mut chain {
            None => chain = Some(part),
            Some(acc) => {
                if acc.last_state_text() == Some(part.initial.as_str()) {
                    acc.links.extend(part.links);
                } else {
                    return Err(format!(
                        "segment starts at {} but path is at {:?}",
                        part.initial,
                        acc.last_state_text()
                    ));
                }
            }
        }
    }
    chain.ok_or_else(|| "empty chain".to_string())
}
