//! Advisory structural checks on parsed traces.
//!
//! Lint never changes a verdict. Breadth-first traces are checked for
//! scenario-numbering discipline (id depth = step number, parent prefixes
//! present, transitions legal); depth-first traces for backtrack discipline
//! (resumed states lie on the current path, revised steps target the right
//! depth).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::verify::replay_ok;
use super::{BlockItem, Chain, Trace, TraceFormat};
use crate::puzzles::{self, PuzzleInstance, PuzzleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    ScenarioDepth,
    OrphanParent,
    IllegalTransition,
    DanglingBacktrack,
    RevisedDepth,
    MalformedState,
}

/// One advisory finding.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub line: usize,
    pub message: String,
}

fn issue(kind: IssueKind, line: usize, message: String) -> Issue {
    Issue {
        kind,
        line,
        message,
    }
}

/// Runs the advisory checks appropriate for the trace's format.
pub fn lint_structure(trace: &Trace, instance: &PuzzleInstance) -> Vec<Issue> {
    match trace.format {
        TraceFormat::Bfs => lint_bfs(trace, instance),
        TraceFormat::Dfs => lint_dfs(trace, instance),
        TraceFormat::Cot | TraceFormat::TotFlat => Vec::new(),
    }
}

fn lint_bfs(trace: &Trace, instance: &PuzzleInstance) -> Vec<Issue> {
    let mut issues = Vec::new();
    let mut ids_by_step: Vec<(u32, BTreeSet<Vec<u32>>)> = Vec::new();
    for block in &trace.steps {
        let mut ids = BTreeSet::new();
        for item in &block.items {
            let BlockItem::Scenario(s) = item else { continue };
            if s.id.len() != block.number as usize {
                issues.push(issue(
                    IssueKind::ScenarioDepth,
                    s.line,
                    format!(
                        "scenario {} has depth {} inside Step {}",
                        dotted(&s.id),
                        s.id.len(),
                        block.number
                    ),
                ));
            }
            if s.id.len() > 1 {
                let parent = s.id[..s.id.len() - 1].to_vec();
                let parent_present = ids_by_step
                    .iter()
                    .rev()
                    .find(|(n, _)| *n + 1 == block.number)
                    .map_or(false, |(_, prev)| prev.contains(&parent));
                if !parent_present {
                    issues.push(issue(
                        IssueKind::OrphanParent,
                        s.line,
                        format!(
                            "scenario {} has no parent {} in Step {}",
                            dotted(&s.id),
                            dotted(&parent),
                            block.number.saturating_sub(1)
                        ),
                    ));
                }
            }
            if let Err(msg) = replay_ok(instance, &s.chain) {
                issues.push(issue(IssueKind::IllegalTransition, s.line, msg));
            }
            ids.insert(s.id.clone());
        }
        ids_by_step.push((block.number, ids));
    }
    issues
}

fn dotted(id: &[u32]) -> String {
    let parts: Vec<String> = id.iter().map(|n| format!("{n}")).collect();
    parts.join(".")
}

fn lint_dfs(trace: &Trace, instance: &PuzzleInstance) -> Vec<Issue> {
    let mut issues = Vec::new();
    // states along the current attempt, as parsed states
    let mut path: Vec<PuzzleState> = alloc::vec![instance.initial_state()];
    let items = trace
        .steps
        .iter()
        .flat_map(|b| b.items.iter().map(move |i| (Some(b), i)))
        .chain(trace.preamble.iter().map(|i| (None, i)));
    // preamble items are rare in DFS output; block order is what matters
    let mut ordered: Vec<(Option<&super::StepBlock>, &BlockItem)> = items.collect();
    ordered.sort_by_key(|(_, item)| item_line(item));

    let mut last_header_checked = 0usize;
    for (block, item) in ordered {
        if let Some(b) = block {
            if b.revised && b.line > last_header_checked {
                last_header_checked = b.line;
                let expected = path.len() as u32;
                if b.number != expected {
                    issues.push(issue(
                        IssueKind::RevisedDepth,
                        b.line,
                        format!(
                            "Step {} (revised) while the current path is at depth {}",
                            b.number,
                            expected.saturating_sub(1)
                        ),
                    ));
                }
            }
        }
        match item {
            BlockItem::Path(p) => {
                if let Err(msg) = replay_ok(instance, &p.chain) {
                    issues.push(issue(IssueKind::IllegalTransition, p.line, msg));
                }
                if let Some(states) = chain_states(instance, &p.chain) {
                    path = states;
                }
            }
            BlockItem::Backtrack(b) => {
                match puzzles::parse_state(instance.kind(), &b.resumed_state) {
                    Ok(state) => match path.iter().rposition(|s| *s == state) {
                        Some(pos) => path.truncate(pos + 1),
                        None => issues.push(issue(
                            IssueKind::DanglingBacktrack,
                            b.line,
                            format!("backtrack to {} which is not on the current path", b.resumed_state),
                        )),
                    },
                    Err(e) => issues.push(issue(
                        IssueKind::MalformedState,
                        b.line,
                        format!("backtrack state: {e}"),
                    )),
                }
            }
            BlockItem::Scenario(_) => {}
        }
    }
    issues
}

fn item_line(item: &BlockItem) -> usize {
    match item {
        BlockItem::Scenario(s) => s.line,
        BlockItem::Path(p) => p.line,
        BlockItem::Backtrack(b) => b.line,
    }
}

/// Parses every rendered state of a chain, simulating dangling final
/// operations; `None` when anything is unparseable.
fn chain_states(instance: &PuzzleInstance, chain: &Chain) -> Option<Vec<PuzzleState>> {
    let kind = instance.kind();
    let mut states = Vec::with_capacity(chain.links.len() + 1);
    let mut current = puzzles::parse_state(kind, &chain.initial).ok()?;
    states.push(current.clone());
    for link in &chain.links {
        match &link.state {
            Some(text) => {
                current = puzzles::parse_state(kind, text).ok()?;
                states.push(current.clone());
            }
            None => {
                // dangling operation: simulate it to know where the path is
                let op = link.operation.as_deref()?;
                let parsed = super::ops::parse_operation(kind, &current, op).ok()?;
                current = puzzles::apply_move(instance, &current, &parsed.mv).ok()?;
                states.push(current.clone());
            }
        }
    }
    Some(states)
}
