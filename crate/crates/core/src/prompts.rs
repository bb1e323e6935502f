//! Chat-message assembly for every method and setting.
//!
//! The two tree-search system prompts ship as byte-exact fixture files and
//! contain no task content, which is what makes that setting zero-shot.
//! Few-shot exemplars are rendered from oracle plans and are asserted to
//! score correct and lint clean at build time.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{self, Plan};
use crate::puzzles::{
    apply_move, is_goal, legal_moves, render_problem, render_state, Move, PuzzleInstance,
    PuzzleKind, PuzzleState,
};
use crate::trace::{
    self, lint_structure, parse_trace, render_chain, render_operation, score_response, ChainStyle,
    OpStyle, TraceFormat,
};

/// Verbatim tree-search system prompts (breadth-first / depth-first).
pub const ATS_BFS_SYSTEM_PROMPT: &str = include_str!("../fixtures/ats_bfs_system.txt");
pub const ATS_DFS_SYSTEM_PROMPT: &str = include_str!("../fixtures/ats_dfs_system.txt");

const TOT_PROPOSE_TEMPLATE: &str = include_str!("../fixtures/tot_propose.txt");
const TOT_VOTE_TEMPLATE: &str = include_str!("../fixtures/tot_vote.txt");

/// Evaluation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cot,
    AtsBfs,
    AtsDfs,
    Tot,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cot, Method::AtsBfs, Method::AtsDfs, Method::Tot];

    pub fn label(self) -> &'static str {
        match self {
            Method::Cot => "CoT",
            Method::AtsBfs => "ATS-BFS",
            Method::AtsDfs => "ATS-DFS",
            Method::Tot => "ToT",
        }
    }

    /// The trace format this method's single responses are scored under.
    pub fn trace_format(self) -> TraceFormat {
        match self {
            Method::Cot => TraceFormat::Cot,
            Method::AtsBfs => TraceFormat::Bfs,
            Method::AtsDfs => TraceFormat::Dfs,
            Method::Tot => TraceFormat::TotFlat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shot {
    ZeroShot,
    FewShot,
}

impl Shot {
    pub fn label(self) -> &'static str {
        match self {
            Shot::ZeroShot => "0-shot",
            Shot::FewShot => "few-shot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message; content is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{0:?} has no fixed system prompt")]
    NoSystemPrompt(Method),
    #[error("few-shot requires an exemplar set")]
    MissingExemplars,
    #[error("exemplar set is for {found:?}, not {expected:?}")]
    ExemplarKindMismatch {
        expected: PuzzleKind,
        found: PuzzleKind,
    },
    #[error("ToT prompts are built by tot_propose_prompt / tot_vote_prompt")]
    TotUsesDedicatedPrompts,
    #[error("no candidates to vote on")]
    EmptyCandidates,
    #[error("exemplar failed its own scoring: {0}")]
    BadExemplar(String),
    #[error("exemplar plan does not solve the instance")]
    UnsolvableExemplar,
}

/// The fixed task-agnostic system prompt for the two tree-search methods.
pub fn system_prompt(method: Method) -> Result<&'static str, PromptError> {
    match method {
        Method::AtsBfs => Ok(ATS_BFS_SYSTEM_PROMPT),
        Method::AtsDfs => Ok(ATS_DFS_SYSTEM_PROMPT),
        _ => Err(PromptError::NoSystemPrompt(method)),
    }
}

/// Shape parameters for rendered exemplars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarConfig {
    /// Children shown per expanded node in breadth-first exemplars.
    pub branch_cap: usize,
    /// Frontier nodes expanded per step in breadth-first exemplars.
    pub frontier_cap: usize,
    /// Wrong first attempts before the solution in depth-first exemplars.
    pub detour_count: usize,
}

impl Default for ExemplarConfig {
    fn default() -> Self {
        ExemplarConfig {
            branch_cap: 3,
            frontier_cap: 6,
            detour_count: 2,
        }
    }
}

/// Few-shot examples for one (kind, method): problem/response text pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub kind: PuzzleKind,
    pub method: Method,
    pub examples: Vec<(String, String)>,
}

fn format_reminder(method: Method) -> &'static str {
    match method {
        Method::AtsBfs | Method::AtsDfs => {
            "\n\nUse the response format described in the system message, writing states and \
operations as shown in the problem. Finish with a line starting with `Summary:` followed \
by your full solution chain `[state] -> (operation) -> [state] -> ...`."
        }
        Method::Cot => {
            "\n\nLet's think step by step. Write one step per line as \
`[state] -> (operation) -> [new state]`, then finish with a line starting with `Summary:` \
followed by your full solution chain."
        }
        Method::Tot => "",
    }
}

/// Assembles the chat messages for a single-response run.
///
/// Zero-shot tree-search: fixed system prompt plus the problem. Zero-shot
/// CoT: the problem with a think-step-by-step instruction. Few-shot (any
/// method): four problem/response pairs then the target problem, with no
/// system message.
pub fn build_messages(
    method: Method,
    shot: Shot,
    instance: &PuzzleInstance,
    exemplars: Option<&ExemplarSet>,
) -> Result<Vec<ChatMessage>, PromptError> {
    if method == Method::Tot {
        return Err(PromptError::TotUsesDedicatedPrompts);
    }
    let problem = render_problem(instance);
    match shot {
        Shot::ZeroShot => {
            let user = ChatMessage::user(format!("{problem}{}", format_reminder(method)));
            Ok(match method {
                Method::AtsBfs | Method::AtsDfs => {
                    alloc::vec![ChatMessage::system(system_prompt(method)?), user]
                }
                _ => alloc::vec![user],
            })
        }
        Shot::FewShot => {
            let set = exemplars.ok_or(PromptError::MissingExemplars)?;
            if set.kind != instance.kind() {
                return Err(PromptError::ExemplarKindMismatch {
                    expected: instance.kind(),
                    found: set.kind,
                });
            }
            let mut messages = Vec::with_capacity(set.examples.len() * 2 + 1);
            for (prob, resp) in &set.examples {
                messages.push(ChatMessage::user(prob.clone()));
                messages.push(ChatMessage::assistant(resp.clone()));
            }
            messages.push(ChatMessage::user(problem));
            Ok(messages)
        }
    }
}

/// Renders an oracle plan in the target response format. The output scores
/// correct and lints clean; both are asserted by tests and at exemplar-set
/// build time.
pub fn render_exemplar(
    instance: &PuzzleInstance,
    plan: &Plan,
    method: Method,
    cfg: &ExemplarConfig,
) -> Result<String, PromptError> {
    if !is_goal(instance, plan.final_state(), plan.moves.len()) {
        return Err(PromptError::UnsolvableExemplar);
    }
    render_trace_text(instance, plan, method, cfg)
}

/// Renders a plan in the target format without requiring it to reach the
/// goal (the mock backend uses this for deliberately wrong answers).
pub fn render_trace_text(
    instance: &PuzzleInstance,
    plan: &Plan,
    method: Method,
    cfg: &ExemplarConfig,
) -> Result<String, PromptError> {
    Ok(match method {
        Method::Cot => render_cot_text(plan),
        Method::AtsBfs => render_bfs_text(instance, plan, cfg),
        Method::AtsDfs => render_dfs_text(instance, plan, cfg),
        Method::Tot => return Err(PromptError::TotUsesDedicatedPrompts),
    })
}

fn summary_line(plan: &Plan) -> String {
    format!(
        "Summary: {}",
        render_chain(&plan.states, &plan.moves, ChainStyle::Summary)
    )
}

/// Numbered steps, one transition each, then a summary block.
fn render_cot_text(plan: &Plan) -> String {
    let mut out = String::new();
    for (k, mv) in plan.moves.iter().enumerate() {
        out += &format!(
            "Step {}\n{} -> ({}) -> {}\n\n",
            k + 1,
            render_state(&plan.states[k]),
            render_operation(mv, OpStyle::WithResult),
            render_state(&plan.states[k + 1]),
        );
    }
    out += &format!(
        "Summary\n{}",
        render_chain(&plan.states, &plan.moves, ChainStyle::Summary)
    );
    out
}

struct BfsNode {
    id: Vec<u32>,
    states: Vec<PuzzleState>,
    moves: Vec<Move>,
    on_gold_path: bool,
}

/// Per-step scenario enumeration: each expanded node shows up to
/// `branch_cap` children with the gold child guaranteed a slot, frontier
/// truncated to `frontier_cap` nodes with the gold node kept.
fn render_bfs_text(instance: &PuzzleInstance, plan: &Plan, cfg: &ExemplarConfig) -> String {
    let mut out = String::new();
    let mut frontier = alloc::vec![BfsNode {
        id: Vec::new(),
        states: alloc::vec![plan.states[0].clone()],
        moves: Vec::new(),
        on_gold_path: true,
    }];
    for depth in 1..=plan.moves.len() {
        out += &format!("Step {depth}\n");
        let mut next: Vec<BfsNode> = Vec::new();
        for node in &frontier {
            let current = node.states.last().expect("node has states");
            let legal = legal_moves(instance, current).expect("kinds match");
            let gold_move = node.on_gold_path.then(|| plan.moves[depth - 1].clone());
            let mut children: Vec<Move> = Vec::new();
            for mv in legal {
                if children.len() == cfg.branch_cap {
                    break;
                }
                children.push(mv);
            }
            if let Some(gold) = &gold_move {
                if !children.contains(gold) {
                    if children.len() == cfg.branch_cap {
                        children.pop();
                    }
                    children.push(gold.clone());
                }
            }
            for (idx, mv) in children.into_iter().enumerate() {
                let Ok(state) = apply_move(instance, current, &mv) else {
                    continue;
                };
                let mut id = node.id.clone();
                id.push(idx as u32 + 1);
                let id_text: Vec<String> = id.iter().map(|n| n.to_string()).collect();
                let mut states = node.states.clone();
                states.push(state);
                let mut moves = node.moves.clone();
                moves.push(mv.clone());
                out += &format!(
                    "scenario {}, {}\n",
                    id_text.join("."),
                    render_chain(&states, &moves, ChainStyle::Scenario)
                );
                let on_gold_path = node.on_gold_path
                    && depth < plan.states.len()
                    && states[depth] == plan.states[depth];
                next.push(BfsNode {
                    id,
                    states,
                    moves,
                    on_gold_path,
                });
            }
        }
        // keep the frontier bounded without dropping the gold node
        if next.len() > cfg.frontier_cap {
            match next.iter().position(|n| n.on_gold_path) {
                Some(g) if g >= cfg.frontier_cap => {
                    let gold = next.swap_remove(g);
                    next.truncate(cfg.frontier_cap - 1);
                    next.push(gold);
                }
                _ => next.truncate(cfg.frontier_cap),
            }
        }
        frontier = next;
        out.push('\n');
    }
    out += &summary_line(plan);
    out
}

/// Wrong first attempts, each explored one step deeper and backed out of,
/// then the solution path, then the summary.
fn render_dfs_text(instance: &PuzzleInstance, plan: &Plan, cfg: &ExemplarConfig) -> String {
    let mut out = String::new();
    let initial = &plan.states[0];
    let initial_text = render_state(initial);

    // wrong first moves: legal, state-changing, not the gold move, and not
    // already a goal state (no-ops would confuse backtrack bookkeeping)
    let wrong_firsts: Vec<Move> = legal_moves(instance, initial)
        .expect("kinds match")
        .into_iter()
        .filter(|mv| {
            *mv != plan.moves[0]
                && apply_move(instance, initial, mv)
                    .map(|s| s != plan.states[1] && s != *initial && !is_goal(instance, &s, 1))
                    .unwrap_or(false)
        })
        .take(cfg.detour_count)
        .collect();

    let mut first_attempt = true;
    for wrong in &wrong_firsts {
        let header = if first_attempt {
            "Step 1".to_string()
        } else {
            "Step 1 (revised)".to_string()
        };
        first_attempt = false;
        let s1 = apply_move(instance, initial, wrong).expect("filtered to legal moves");
        out += &format!(
            "{header}\n{}\n\n",
            render_chain(
                &[initial.clone(), s1.clone()],
                core::slice::from_ref(wrong),
                ChainStyle::DfsPath
            )
        );
        // one continuation that does not reach the goal
        let continuation = legal_moves(instance, &s1)
            .expect("kinds match")
            .into_iter()
            .find_map(|mv| {
                let s2 = apply_move(instance, &s1, &mv).ok()?;
                (s2 != s1 && !is_goal(instance, &s2, 2)).then_some((mv, s2))
            });
        if let Some((mv, s2)) = continuation {
            out += &format!(
                "Step 2\n{}\n\n",
                render_chain(
                    &[initial.clone(), s1.clone(), s2],
                    &[wrong.clone(), mv],
                    ChainStyle::DfsPath
                )
            );
            out += &format!(
                "This is not the goal. Let's step back. Now it is {}.\n\n",
                render_state(&s1)
            );
        }
        out += &format!("Let's step back. Now it is {initial_text}.\n\n");
    }

    for k in 0..plan.moves.len() {
        let header = if k == 0 && !first_attempt {
            "Step 1 (revised)".to_string()
        } else {
            format!("Step {}", k + 1)
        };
        out += &format!(
            "{header}\n{}\n\n",
            render_chain(&plan.states[..k + 2], &plan.moves[..k + 1], ChainStyle::DfsPath)
        );
    }
    out += &summary_line(plan);
    out
}

/// Builds a propose prompt: the problem, the path so far, and the line
/// grammar for successor states.
pub fn tot_propose_prompt(
    instance: &PuzzleInstance,
    chain_so_far: &Plan,
    proposal_cap: usize,
) -> Vec<ChatMessage> {
    let path = render_chain_or_initial(chain_so_far);
    let content = TOT_PROPOSE_TEMPLATE
        .replace("{problem}", &render_problem(instance))
        .replace("{path}", &path)
        .replace("{cap}", &proposal_cap.to_string());
    alloc::vec![ChatMessage::user(content)]
}

/// Builds a vote prompt over candidate paths. Errors on an empty candidate
/// list.
pub fn tot_vote_prompt(
    instance: &PuzzleInstance,
    candidates: &[Plan],
) -> Result<Vec<ChatMessage>, PromptError> {
    if candidates.is_empty() {
        return Err(PromptError::EmptyCandidates);
    }
    let mut listing = String::new();
    for (k, plan) in candidates.iter().enumerate() {
        listing += &format!("Candidate {}:\n{}\n", k + 1, render_chain_or_initial(plan));
    }
    let content = TOT_VOTE_TEMPLATE
        .replace("{problem}", &render_problem(instance))
        .replace("{candidates}", &listing);
    Ok(alloc::vec![ChatMessage::user(content)])
}

fn render_chain_or_initial(plan: &Plan) -> String {
    if plan.moves.is_empty() {
        render_state(&plan.states[0])
    } else {
        render_chain(&plan.states, &plan.moves, ChainStyle::Summary)
    }
}

/// Draws `count` exemplar instances from the pool (train split), solves them
/// with the oracle, renders responses, and asserts each one scores correct
/// and lints clean.
pub fn build_exemplar_set(
    kind: PuzzleKind,
    method: Method,
    pool: &[PuzzleInstance],
    count: usize,
    seed: u64,
    cfg: &ExemplarConfig,
) -> Result<ExemplarSet, PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6578_656d);
    let picks = rand::seq::index::sample(&mut rng, pool.len(), count.min(pool.len()));
    let mut examples = Vec::with_capacity(count);
    for idx in picks.iter() {
        let instance = &pool[idx];
        let plan = oracle::solve(instance).ok_or(PromptError::UnsolvableExemplar)?;
        let response = render_exemplar(instance, &plan, method, cfg)?;
        let verdict = score_response(instance, &response, method.trace_format());
        if !verdict.correct {
            return Err(PromptError::BadExemplar(format!(
                "{:?}: {}",
                verdict.failure_reason, verdict.details
            )));
        }
        let trace = parse_trace(&response, method.trace_format(), kind);
        let issues = lint_structure(&trace, instance);
        if !issues.is_empty() {
            return Err(PromptError::BadExemplar(format!(
                "lint: {}",
                issues[0].message
            )));
        }
        examples.push((render_problem(instance), response));
    }
    Ok(ExemplarSet {
        kind,
        method,
        examples,
    })
}

pub use trace::Chain;
