//! Parsing, structural linting, and correctness scoring of model responses.
//!
//! A response is parsed into a [`Trace`] (best effort, never failing), the
//! answer chain is extracted (summary line first, format-specific fallbacks
//! otherwise), and the chain is replayed move by move against the puzzle
//! semantics and the oracle. Structure checks are advisory lint; only the
//! replayed chain decides the verdict.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::puzzles::{self, PuzzleInstance, PuzzleState};


mod lint;
mod ops;
mod parse;
mod verify;

pub use lint::{lint_structure, Issue, IssueKind};
pub use ops::{
    chain_of_plan, parse_operation, render_chain, render_operation, ChainStyle, OpStyle, ParsedOp,
};
pub use parse::{parse_flat_episode, parse_trace};
pub use verify::verify_chain;

/// Parses a single `[s] -> (op) -> [s']` line into a [`Chain`].
pub fn parse_chain_line(text: &str) -> Result<Chain, alloc::string::String> {
    parse::parse_arrow_chain(text)
}

/// Replays a chain against an instance, returning the final state and move
/// count; any defect is an error message.
pub fn replay_rendered_chain(
    instance: &PuzzleInstance,
    chain: &Chain,
) -> Result<(PuzzleState, usize), alloc::string::String> {
    match verify::replay_chain(instance, chain) {
        Ok(ok) => Ok(ok),
        Err(verify::ReplayError::Parse(m)) | Err(verify::ReplayError::Illegal(m)) => Err(m),
    }
}

/// Response formats the parser understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    Bfs,
    Dfs,
    Cot,
    TotFlat,
}

/// One link of a solution chain: an optional operation and the rendered
/// state after it. The state is `None` only when a line ends on a dangling
/// operation, which may happen on the final link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub operation: Option<String>,
    pub state: Option<String>,
}

/// A rendered solution path: the initial state and the links that follow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub initial: String,
    pub links: Vec<ChainLink>,
}

impl Chain {
    /// Number of moves the chain claims.
    pub fn move_count(&self) -> usize {
        self.links.len()
    }

    /// The last rendered state, when present.
    pub fn last_state_text(&self) -> Option<&str> {
        for link in self.links.iter().rev() {
            if let Some(s) = &link.state {
                return Some(s);
            }
        }
        Some(&self.initial)
    }
}

/// `scenario 1.1, [chain]` line of a breadth-first trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioLine {
    /// Dotted path, e.g. `1.1.2` parses to `[1, 1, 2]`.
    pub id: Vec<u32>,
    pub chain: Chain,
    pub line: usize,
}

/// `Let's step back. Now it is [state].` marker of a depth-first trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktrackMarker {
    pub resumed_state: String,
    pub line: usize,
}

/// A bare arrow-chain line inside a step block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathLine {
    pub chain: Chain,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockItem {
    Scenario(ScenarioLine),
    Path(PathLine),
    Backtrack(BacktrackMarker),
}

/// Everything between one `Step k` header and the next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepBlock {
    pub number: u32,
    pub revised: bool,
    pub items: Vec<BlockItem>,
    pub line: usize,
}

/// A line the parser could not place; never a hard failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

/// Parsed response.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub format: TraceFormat,
    /// Items appearing before any step header.
    pub preamble: Vec<BlockItem>,
    pub steps: Vec<StepBlock>,
    pub summary: Option<Chain>,
    /// Multi-round episode structure; present for [`TraceFormat::TotFlat`].
    pub flat: Option<FlatEpisode>,
    pub diagnostics: Vec<Diagnostic>,
}

/// One round of a flattened multi-round episode.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRound {
    pub index: u32,
    pub current: Vec<Chain>,
    pub proposals: Vec<(Chain, Option<f64>)>,
    pub chosen: Vec<Chain>,
}

/// A flattened multi-round episode (`# step = 0 ... # Summary`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatEpisode {
    pub input_line: Option<String>,
    pub rounds: Vec<FlatRound>,
    pub summary: Option<Chain>,
}

/// Why a response failed, when it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NoSummary,
    ParseError,
    IllegalTransition,
    StepBudgetExceeded,
    GoalNotMet,
    NotOptimal,
    BackendError,
}

/// Scoring outcome for one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub failure_reason: Option<FailureReason>,
    pub details: String,
}

impl Verdict {
    pub fn correct() -> Self {
        Verdict {
            correct: true,
            failure_reason: None,
            details: String::new(),
        }
    }

    pub fn failed(reason: FailureReason, details: impl Into<String>) -> Self {
        Verdict {
            correct: false,
            failure_reason: Some(reason),
            details: details.into(),
        }
    }
}

/// Extracts the answer chain: the summary when present, otherwise a
/// format-specific fallback (deepest goal-reaching scenario for BFS, final
/// path for DFS, stitched step lines for CoT, last chosen chain for
/// flattened episodes).
pub fn extract_answer(trace: &Trace, instance: &PuzzleInstance) -> Option<Chain> {
    if let Some(summary) = &trace.summary {
        return Some(summary.clone());
    }
    match trace.format {
        TraceFormat::Bfs => {
            let mut best: Option<&ScenarioLine> = None;
            for block in &trace.steps {
                for item in &block.items {
                    if let BlockItem::Scenario(s) = item {
                        if chain_reaches_goal(instance, &s.chain)
                            && best.map_or(true, |b| s.id.len() >= b.id.len())
                        {
                            best = Some(s);
                        }
                    }
                }
            }
            best.map(|s| s.chain.clone())
        }
        TraceFormat::Dfs => {
            let mut last: Option<&PathLine> = None;
            for item in trace.preamble.iter().chain(
                trace.steps.iter().flat_map(|b| b.items.iter()),
            ) {
                if let BlockItem::Path(p) = item {
                    last = Some(p);
                }
            }
            last.map(|p| p.chain.clone())
        }
        TraceFormat::Cot => stitch_paths(trace),
        TraceFormat::TotFlat => trace
            .flat
            .as_ref()
            .and_then(|f| f.rounds.last())
            .and_then(|r| r.chosen.first())
            .cloned(),
    }
}

/// Joins consecutive step lines whose boundary states agree into one chain.
fn stitch_paths(trace: &Trace) -> Option<Chain> {
    let mut chain: Option<Chain> = None;
    for block in &trace.steps {
        for item in &block.items {
            let BlockItem::Path(p) = item else { continue };
            match &mut chain {
                None => chain = Some(p.chain.clone()),
                Some(acc) => {
                    if acc.last_state_text() == Some(p.chain.initial.as_str()) {
                        acc.links.extend(p.chain.links.iter().cloned());
                    } else {
                        // disconnected step; restart from it
                        *acc = p.chain.clone();
                    }
                }
            }
        }
    }
    chain
}

fn chain_reaches_goal(instance: &PuzzleInstance, chain: &Chain) -> bool {
    let Some(last) = chain.last_state_text() else {
        return false;
    };
    let Ok(state) = puzzles::parse_state(instance.kind(), last) else {
        return false;
    };
    puzzles::is_goal(instance, &state, chain.move_count())
}

/// The single scoring entry point: parse, extract, replay.
pub fn score_response(instance: &PuzzleInstance, text: &str, format: TraceFormat) -> Verdict {
    let trace = parse_trace(text, format, instance.kind());
    match extract_answer(&trace, instance) {
        Some(chain) => verify_chain(instance, &chain),
        None => Verdict::failed(FailureReason::NoSummary, "no summary or fallback answer"),
    }
}

#[cfg(test)]
mod tests;
