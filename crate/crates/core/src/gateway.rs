//! Uniform chat-completion interface and the deterministic oracle-backed
//! mock backend.
//!
//! The mock's behavior is a pure function of (master seed, puzzle kind,
//! instance id, trial index, call ordinal): randomness comes from a
//! counter-keyed stream cipher, never from shared mutable state, so results
//! are identical under any thread interleaving.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{self, Plan};
use crate::prompts::{
    render_trace_text, ChatMessage, ExemplarConfig, Method,
};
use crate::puzzles::{
    apply_move, is_goal, legal_moves, ArithmeticState, DropWaterState, MinimalGrassState,
    NumberPathState, PuzzleInstance, PuzzleState,
};
use crate::rational::Rational;
use crate::trace::{self, render_chain, ChainStyle};

/// Sampling parameters for one completion call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub seed_hint: Option<u64>,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            temperature: 0.2,
            max_output_tokens: 4096,
            seed_hint: None,
        }
    }
}

/// Token counts for one call; additive under aggregation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl core::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Usage) {
        self.input_tokens += rhs.input_tokens;
        self.output_tokens += rhs.output_tokens;
    }
}

/// `ceil(bytes / 4)`: a crude, documented token estimate. Used only by the
/// mock backend and the fine-tune length cap, never for billing real calls.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.len() as u64 + 3) / 4
}

fn messages_tokens(messages: &[ChatMessage]) -> u64 {
    messages.iter().map(|m| estimate_tokens(&m.content)).sum()
}

/// How the mock corrupts a response when the corruption coin comes up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionMode {
    /// A legal chain ending somewhere other than the goal.
    WrongAnswer,
    /// One mid-chain state perturbed so the replay breaks.
    IllegalTransition,
    /// Summary deleted and the final step block truncated away.
    Malformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    pub error_rate: f64,
    pub corruption_mode: CorruptionMode,
    pub master_seed: u64,
    pub branch_cap: usize,
    pub detour_count: usize,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            error_rate: 0.0,
            corruption_mode: CorruptionMode::WrongAnswer,
            master_seed: 0,
            branch_cap: 3,
            detour_count: 2,
        }
    }
}

/// Routing information the orchestrator attaches to every call. The live
/// backend ignores it; the mock keys its determinism off it.
#[derive(Debug, Clone)]
pub struct CallContext {
    pub instance: PuzzleInstance,
    pub instance_id: u64,
    pub method: Method,
    pub trial_index: u32,
    pub call_ordinal: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("empty message list")]
    EmptyMessages,
    #[error("network failure: {0}")]
    Network(String),
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("provider refusal: {0}")]
    Refusal(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("instance is not oracle-solvable: {0}")]
    Unsolvable(String),
}

/// A completed call: response text and its token usage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

/// A chat-completion backend. Implementations must be shareable across
/// threads.
pub trait ChatBackend: Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
        ctx: &CallContext,
    ) -> Result<Completion, BackendError>;
}

/// Deterministic oracle-backed mock.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    pub config: MockConfig,
}

impl MockBackend {
    pub fn new(config: MockConfig) -> Self {
        MockBackend { config }
    }

    /// Proposals emitted per propose call.
    const PROPOSAL_CAP: usize = 8;

    fn rng(&self, ctx: &CallContext, purpose: u8) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.config.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&ctx.instance_id.to_le_bytes());
        seed[16..20].copy_from_slice(&ctx.trial_index.to_le_bytes());
        seed[20..24].copy_from_slice(&ctx.call_ordinal.to_le_bytes());
        seed[24] = ctx.instance.kind() as u8;
        seed[25] = purpose;
        ChaCha8Rng::from_seed(seed)
    }

    fn corrupted(&self, rng: &mut ChaCha8Rng) -> bool {
        rng.random::<f64>() < self.config.error_rate
    }

    fn exemplar_config(&self) -> ExemplarConfig {
        ExemplarConfig {
            branch_cap: self.config.branch_cap,
            detour_count: self.config.detour_count,
            ..ExemplarConfig::default()
        }
    }

    /// Synthesizes the response text for a call (the mock equivalent of the
    /// model's reply).
    pub fn respond(
        &self,
        messages: &[ChatMessage],
        ctx: &CallContext,
    ) -> Result<String, BackendError> {
        if ctx.method == Method::Tot {
            let last_user = messages
                .iter()
                .rev()
                .find(|m| m.role == crate::prompts::Role::User)
                .ok_or(BackendError::EmptyMessages)?;
            if last_user.content.contains("List the possible next states") {
                return self.respond_propose(&last_user.content, ctx);
            }
            if last_user.content.contains("Rate how promising each candidate") {
                return self.respond_vote(&last_user.content, ctx);
            }
            return Err(BackendError::Protocol(
                "unrecognized tree controller prompt".to_string(),
            ));
        }
        self.respond_single(ctx)
    }

    fn gold_plan(&self, ctx: &CallContext) -> Result<Plan, BackendError> {
        oracle::solve(&ctx.instance).ok_or_else(|| {
            BackendError::Unsolvable(format!("{:?}", ctx.instance))
        })
    }

    fn respond_single(&self, ctx: &CallContext) -> Result<String, BackendError> {
        let mut rng = self.rng(ctx, 0);
        let plan = self.gold_plan(ctx)?;
        let cfg = self.exemplar_config();
        let clean = render_trace_text(&ctx.instance, &plan, ctx.method, &cfg)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        if !self.corrupted(&mut rng) {
            return Ok(clean);
        }
        Ok(match self.config.corruption_mode {
            CorruptionMode::WrongAnswer => {
                let wrong = wrong_plan(&ctx.instance, &plan);
                render_trace_text(&ctx.instance, &wrong, ctx.method, &cfg)
                    .map_err(|e| BackendError::Protocol(e.to_string()))?
            }
            CorruptionMode::IllegalTransition => corrupt_mid_state(&plan, &clean),
            CorruptionMode::Malformed => truncate_response(&clean),
        })
    }

    fn respond_propose(&self, prompt: &str, ctx: &CallContext) -> Result<String, BackendError> {
        let mut rng = self.rng(ctx, 1);
        let corrupted = self.corrupted(&mut rng);
        let plan = self.gold_plan(ctx)?;
        let path = extract_section_chain(prompt, "The path taken so far:")
            .ok_or_else(|| BackendError::Protocol("propose prompt without a path".to_string()))?;
        let (state, moves_taken) = trace::replay_rendered_chain(&ctx.instance, &path)
            .map_err(BackendError::Protocol)?;

        let legal = legal_moves(&ctx.instance, &state)
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        // the gold continuation, when this path is a prefix of the gold plan
        let gold_next = (moves_taken < plan.moves.len()
            && on_plan_prefix(&ctx.instance, &path, &plan))
        .then(|| plan.moves[moves_taken].clone());

        let mut ordered = Vec::with_capacity(legal.len());
        match (&gold_next, corrupted) {
            (Some(gold), false) => {
                ordered.push(gold.clone());
                ordered.extend(legal.into_iter().filter(|m| m != gold));
            }
            (Some(gold), true) if legal.len() > 1 => {
                // corrupted proposals omit the promising branch
                ordered.extend(legal.into_iter().filter(|m| m != gold));
            }
            _ => ordered.extend(legal),
        }
        let mut lines = Vec::new();
        for mv in ordered.into_iter().take(Self::PROPOSAL_CAP) {
            let Ok(next) = apply_move(&ctx.instance, &state, &mv) else {
                continue;
            };
            lines.push(render_chain(
                &[state.clone(), next],
                core::slice::from_ref(&mv),
                ChainStyle::Summary,
            ));
        }
        Ok(lines.join("\n"))
    }

    fn respond_vote(&self, prompt: &str, ctx: &CallContext) -> Result<String, BackendError> {
        let mut rng = self.rng(ctx, 2);
        let corrupted = self.corrupted(&mut rng);
        let plan = self.gold_plan(ctx)?;
        let mut lines = Vec::new();
        for (k, chain) in extract_candidate_chains(prompt).into_iter().enumerate() {
            let on_gold = chain
                .as_ref()
                .map(|c| on_plan_prefix(&ctx.instance, c, &plan))
                .unwrap_or(false);
            let mut value = if on_gold { 100 } else { 0 };
            if corrupted {
                value = 100 - value;
            }
            lines.push(format!("candidate {}: value = {}", k + 1, value));
        }
        if lines.is_empty() {
            return Err(BackendError::Protocol(
                "vote prompt without candidates".to_string(),
            ));
        }
        Ok(lines.join("\n"))
    }
}

impl ChatBackend for MockBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        _params: &CompletionParams,
        ctx: &CallContext,
    ) -> Result<Completion, BackendError> {
        if messages.is_empty() {
            return Err(BackendError::EmptyMessages);
        }
        let text = self.respond(messages, ctx)?;
        let usage = Usage {
            input_tokens: messages_tokens(messages),
            output_tokens: estimate_tokens(&text),
        };
        Ok(Completion { text, usage })
    }
}

/// True when `chain` replays to a prefix of the plan's state sequence.
fn on_plan_prefix(instance: &PuzzleInstance, chain: &trace::Chain, plan: &Plan) -> bool {
    let Ok((state, moves)) = trace::replay_rendered_chain(instance, chain) else {
        return false;
    };
    plan.states.get(moves) == Some(&state)
}

/// The chain on the first bracketed line after `marker`.
fn extract_section_chain(prompt: &str, marker: &str) -> Option<trace::Chain> {
    let mut in_section = false;
    for line in prompt.lines() {
        let line = line.trim();
        if line.ends_with(marker) {
            in_section = true;
            continue;
        }
        if in_section && line.starts_with('[') {
            return trace::parse_chain_line(line).ok();
        }
    }
    None
}

/// Chains following `Candidate <k>:` headers, in order; unparseable
/// candidates become `None` so vote indices stay aligned.
fn extract_candidate_chains(prompt: &str) -> Vec<Option<trace::Chain>> {
    let mut out = Vec::new();
    let mut expecting = false;
    for line in prompt.lines() {
        let line = line.trim();
        if line.starts_with("Candidate ") && line.ends_with(':') {
            if expecting {
                out.push(None);
            }
            expecting = true;
            continue;
        }
        if expecting {
            out.push(trace::parse_chain_line(line).ok());
            expecting = false;
        }
    }
    if expecting {
        out.push(None);
    }
    out
}

/// A legal plan that fails the goal: the last move replaced by the first
/// alternative whose endpoint is not a goal state, or the plan cut one move
/// short when no such alternative exists.
fn wrong_plan(instance: &PuzzleInstance, plan: &Plan) -> Plan {
    if plan.moves.is_empty() {
        return plan.clone();
    }
    if let Some(last_idx) = plan.moves.len().checked_sub(1) {
        let before = &plan.states[last_idx];
        if let Ok(moves) = legal_moves(instance, before) {
            for mv in moves {
                if mv == plan.moves[last_idx] {
                    continue;
                }
                if let Ok(end) = apply_move(instance, before, &mv) {
                    if !is_goal(instance, &end, plan.moves.len()) {
                        let mut moves = plan.moves[..last_idx].to_vec();
                        moves.push(mv);
                        let mut states = plan.states[..=last_idx].to_vec();
                        states.push(end);
                        return Plan { moves, states };
                    }
                }
            }
        }
    }
    // fall back to stopping one move short
    Plan {
        moves: plan.moves[..plan.moves.len() - 1].to_vec(),
        states: plan.states[..plan.states.len() - 1].to_vec(),
    }
}

/// Bumps one value in a state so it no longer matches the replay.
fn perturb_state(state: &PuzzleState) -> PuzzleState {
    match state {
        PuzzleState::DropWater(s) => PuzzleState::DropWater(DropWaterState {
            level_a: s.level_a + 1,
            level_b: s.level_b,
        }),
        PuzzleState::NumberPath(s) => PuzzleState::NumberPath(NumberPathState {
            value: s.value + 1,
        }),
        PuzzleState::Arithmetic(s) => {
            let mut remaining = s.remaining.clone();
            if let Some(first) = remaining.first_mut() {
                *first = first.checked_add(&Rational::from_integer(1));
            }
            remaining.sort();
            PuzzleState::Arithmetic(ArithmeticState { remaining })
        }
        PuzzleState::MinimalGrass(s) => {
            let mut dims = s.dims;
            for d in dims.iter_mut() {
                if let Some((w, h)) = d {
                    *d = Some((*w + 1, *h));
                    break;
                }
            }
            PuzzleState::MinimalGrass(MinimalGrassState { dims })
        }
    }
}

/// Replaces the summary line with one whose middle state is perturbed.
fn corrupt_mid_state(plan: &Plan, clean: &str) -> String {
    let mid = (plan.states.len() / 2).clamp(1, plan.states.len().saturating_sub(1));
    let mut states = plan.states.clone();
    states[mid] = perturb_state(&states[mid]);
    let bad_summary = format!(
        "Summary: {}",
        render_chain(&states, &plan.moves, ChainStyle::Summary)
    );
    let mut out: Vec<&str> = Vec::new();
    let mut replaced = false;
    for line in clean.lines() {
        if line.trim_start().starts_with("Summary") {
            out.push(&bad_summary);
            replaced = true;
        } else {
            out.push(line);
        }
    }
    if !replaced {
        out.push(&bad_summary);
    }
    out.join("\n")
}

/// Deletes the summary and truncates from the last step header, simulating
/// a response cut off before finishing.
fn truncate_response(clean: &str) -> String {
    let lines: Vec<&str> = clean
        .lines()
        .filter(|l| !l.trim_start().starts_with("Summary"))
        .collect();
    let last_step = lines
        .iter()
        .rposition(|l| {
            let t = l.trim_start();
            t.starts_with("Step ") || t.starts_with("step ")
        })
        .unwrap_or(0);
    lines[..last_step].join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::build_messages;
    use crate::puzzles::{ArithmeticInstance, PuzzleKind};
    use crate::trace::{score_response, TraceFormat};

    fn ctx(method: Method, trial: u32) -> CallContext {
        CallContext {
            instance: PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 16)),
            instance_id: 11,
            method,
            trial_index: trial,
            call_ordinal: 0,
        }
    }

    fn messages_for(method: Method) -> Vec<ChatMessage> {
        build_messages(
            method,
            crate::prompts::Shot::ZeroShot,
            &ctx(method, 0).instance,
            None,
        )
        .unwrap()
    }

    #[test]
    fn estimate_is_byte_quarter_ceiling() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("12345678"), 2);
        assert_eq!(estimate_tokens("123456789"), 3);
        // frozen snapshot of the shipped breadth-first system prompt
        assert_eq!(
            estimate_tokens(crate::prompts::ATS_BFS_SYSTEM_PROMPT),
            210
        );
    }

    #[test]
    fn perfect_mock_scores_correct_for_every_method() {
        let mock = MockBackend::default();
        for method in [Method::Cot, Method::AtsBfs, Method::AtsDfs] {
            let messages = messages_for(method);
            let c = mock
                .complete(&messages, &CompletionParams::default(), &ctx(method, 0))
                .unwrap();
            let verdict = score_response(&ctx(method, 0).instance, &c.text, method.trace_format());
            assert!(verdict.correct, "{method:?}: {verdict:?}");
            assert!(c.usage.input_tokens > 0 && c.usage.output_tokens > 0);
        }
    }

    #[test]
    fn wrong_answer_mode_yields_goal_not_met() {
        let mock = MockBackend::new(MockConfig {
            error_rate: 1.0,
            ..MockConfig::default()
        });
        let messages = messages_for(Method::Cot);
        let c = mock
            .complete(&messages, &CompletionParams::default(), &ctx(Method::Cot, 0))
            .unwrap();
        let verdict = score_response(&ctx(Method::Cot, 0).instance, &c.text, TraceFormat::Cot);
        assert_eq!(
            verdict.failure_reason,
            Some(crate::trace::FailureReason::GoalNotMet)
        );
    }

    #[test]
    fn illegal_transition_mode_breaks_replay() {
        let mock = MockBackend::new(MockConfig {
            error_rate: 1.0,
            corruption_mode: CorruptionMode::IllegalTransition,
            ..MockConfig::default()
        });
        let messages = messages_for(Method::Cot);
        let c = mock
            .complete(&messages, &CompletionParams::default(), &ctx(Method::Cot, 0))
            .unwrap();
        let verdict = score_response(&ctx(Method::Cot, 0).instance, &c.text, TraceFormat::Cot);
        assert_eq!(
            verdict.failure_reason,
            Some(crate::trace::FailureReason::IllegalTransition)
        );
    }

    #[test]
    fn malformed_mode_loses_the_answer() {
        let mock = MockBackend::new(MockConfig {
            error_rate: 1.0,
            corruption_mode: CorruptionMode::Malformed,
            ..MockConfig::default()
        });
        for method in [Method::Cot, Method::AtsBfs, Method::AtsDfs] {
            let messages = messages_for(method);
            let c = mock
                .complete(&messages, &CompletionParams::default(), &ctx(method, 0))
                .unwrap();
            let verdict = score_response(&ctx(method, 0).instance, &c.text, method.trace_format());
            assert!(!verdict.correct, "{method:?} still correct:\n{}", c.text);
        }
    }

    #[test]
    fn mock_is_deterministic_per_counter() {
        let mock = MockBackend::new(MockConfig {
            error_rate: 0.5,
            master_seed: 9,
            ..MockConfig::default()
        });
        let messages = messages_for(Method::Cot);
        let a = mock
            .complete(&messages, &CompletionParams::default(), &ctx(Method::Cot, 3))
            .unwrap();
        let b = mock
            .complete(&messages, &CompletionParams::default(), &ctx(Method::Cot, 3))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corruption_rate_is_binomial() {
        let mock = MockBackend::new(MockConfig {
            error_rate: 0.3,
            master_seed: 1234,
            ..MockConfig::default()
        });
        let messages = messages_for(Method::Cot);
        let n = 2000u32;
        let mut wrong = 0u32;
        for trial in 0..n {
            let c = mock
                .complete(&messages, &CompletionParams::default(), &ctx(Method::Cot, trial))
                .unwrap();
            let verdict =
                score_response(&ctx(Method::Cot, 0).instance, &c.text, TraceFormat::Cot);
            if !verdict.correct {
                wrong += 1;
            }
        }
        let p = 0.3f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let observed = wrong as f64 / n as f64;
        assert!(
            (observed - p).abs() < 3.0 * sigma,
            "observed {observed} vs {p} (sigma {sigma})"
        );
    }

    #[test]
    fn empty_messages_rejected() {
        let mock = MockBackend::default();
        let err = mock
            .complete(&[], &CompletionParams::default(), &ctx(Method::Cot, 0))
            .unwrap_err();
        assert_eq!(err, BackendError::EmptyMessages);
    }

    #[test]
    fn unsolvable_instance_is_a_typed_error() {
        let mock = MockBackend::default();
        let bad = CallContext {
            instance: PuzzleInstance::Arithmetic(ArithmeticInstance::new([1, 1, 1], 24)),
            instance_id: 0,
            method: Method::Cot,
            trial_index: 0,
            call_ordinal: 0,
        };
        let messages = alloc::vec![ChatMessage::user("p")];
        let err = mock
            .complete(&messages, &CompletionParams::default(), &bad)
            .unwrap_err();
        assert!(matches!(err, BackendError::Unsolvable(_)));
    }

    #[test]
    fn propose_and_vote_follow_the_gold_path() {
        let instance = PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 16));
        let plan = oracle::solve(&instance).unwrap();
        let mock = MockBackend::default();
        let c = ctx(Method::Tot, 0);

        let empty = Plan {
            moves: alloc::vec![],
            states: alloc::vec![instance.initial_state()],
        };
        let propose = crate::prompts::tot_propose_prompt(&instance, &empty, 16);
        let text = mock.respond(&propose, &c).unwrap();
        let first = text.lines().next().unwrap();
        // the gold continuation is proposed first in clean mode
        assert!(first.contains("2 * 3 = 6"), "{first}");

        let gold_prefix = Plan {
            moves: plan.moves[..1].to_vec(),
            states: plan.states[..2].to_vec(),
        };
        let off_gold = Plan {
            moves: alloc::vec![crate::puzzles::Move::Arithmetic(crate::puzzles::ArithmeticMove {
                lhs: Rational::from_integer(2),
                rhs: Rational::from_integer(3),
                op: crate::puzzles::ArithOp::Add,
            })],
            states: alloc::vec![
                instance.initial_state(),
                apply_move(
                    &instance,
                    &instance.initial_state(),
                    &crate::puzzles::Move::Arithmetic(crate::puzzles::ArithmeticMove {
                        lhs: Rational::from_integer(2),
                        rhs: Rational::from_integer(3),
                        op: crate::puzzles::ArithOp::Add,
                    })
                )
                .unwrap()
            ],
        };
        let vote = crate::prompts::tot_vote_prompt(&instance, &[gold_prefix, off_gold]).unwrap();
        let votes = mock.respond(&vote, &c).unwrap();
        assert_eq!(
            votes.trim(),
            "candidate 1: value = 100\ncandidate 2: value = 0"
        );
    }

    #[test]
    fn grass_clean_response_uses_oracle_dims() {
        let instance = PuzzleInstance::MinimalGrass(crate::puzzles::MinimalGrassInstance {
            areas: [4, 4, 4],
        });
        let mock = MockBackend::default();
        let c = CallContext {
            instance,
            instance_id: 1,
            method: Method::Cot,
            trial_index: 0,
            call_ordinal: 0,
        };
        let messages = alloc::vec![ChatMessage::user("p")];
        let text = mock.respond(&messages, &c).unwrap();
        assert!(text.contains("1 x 4"));
        assert!(score_response(&c.instance, &text, TraceFormat::Cot).correct);
        assert_eq!(c.instance.kind(), PuzzleKind::MinimalGrass);
    }
}
