//! Run drivers: single-message runs, self-consistency best-of-k, and the
//! multi-round tree controller, each producing a scored [`RunRecord`] with
//! exact token accounting.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gateway::{BackendError, CallContext, ChatBackend, CompletionParams, Usage};
use crate::oracle::Plan;
use crate::prompts::{
    build_messages, tot_propose_prompt, tot_vote_prompt, ChatMessage, ExemplarSet, Shot,
};
use crate::puzzles::{
    apply_move, is_goal, render_state, PuzzleInstance, PuzzleKind,
};
use crate::trace::{
    chain_of_plan, parse_chain_line, parse_operation, score_response, verify_chain, Chain,
    FailureReason, Verdict,
};

pub use crate::prompts::Method;

/// Low-cost or high-cost experiment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostTier {
    Low,
    High,
}

impl CostTier {
    pub fn label(self) -> &'static str {
        match self {
            CostTier::Low => "low",
            CostTier::High => "high",
        }
    }
}

/// How self-consistency picks among trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// First verifier-correct trial (default).
    #[default]
    FirstCorrect,
    /// Most common extracted answer across trials.
    MajorityAnswer,
}

/// One experiment arm's knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSetting {
    pub shot: Shot,
    pub tier: CostTier,
    pub self_consistency: u32,
    pub tot_width: usize,
    pub voters: u32,
    /// Candidates parsed per kept chain and proposal round.
    pub proposal_cap: usize,
    pub selection: SelectionRule,
    pub params: CompletionParams,
}

impl RunSetting {
    /// Single call, width 1, temperature 0.2.
    pub fn low_cost(shot: Shot) -> Self {
        RunSetting {
            shot,
            tier: CostTier::Low,
            self_consistency: 1,
            tot_width: 1,
            voters: 3,
            proposal_cap: 16,
            selection: SelectionRule::default(),
            params: CompletionParams {
                temperature: 0.2,
                ..CompletionParams::default()
            },
        }
    }

    /// Best of 3 (width 5 for the tree controller), temperature 0.7.
    pub fn high_cost(shot: Shot) -> Self {
        RunSetting {
            shot,
            tier: CostTier::High,
            self_consistency: 3,
            tot_width: 5,
            voters: 3,
            proposal_cap: 16,
            selection: SelectionRule::default(),
            params: CompletionParams {
                temperature: 0.7,
                ..CompletionParams::default()
            },
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.shot.label(), self.tier.label())
    }
}

/// One backend call inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub messages_digest: String,
    pub response: String,
    pub verdict: Verdict,
    pub usage: Usage,
}

/// One proposal with its mean voter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotProposalLog {
    pub chain: String,
    pub value: f64,
    pub goal_reached: bool,
}

/// One controller round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotRoundLog {
    pub index: u32,
    /// Chains held at the start of the round.
    pub kept: Vec<String>,
    pub proposals: Vec<TotProposalLog>,
    /// Chains kept after voting.
    pub chosen: Vec<String>,
    /// Proposal lines that failed to parse or replay.
    pub dropped: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TotEpisodeLog {
    pub width: usize,
    pub rounds: Vec<TotRoundLog>,
    /// Renders of every goal-reaching chain encountered.
    pub goal_chains: Vec<String>,
}

/// One evaluated attempt at one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub kind: PuzzleKind,
    pub instance_id: u64,
    pub instance: PuzzleInstance,
    pub method: Method,
    pub setting: RunSetting,
    pub trials: Vec<TrialRecord>,
    pub selected_trial: usize,
    pub final_verdict: Verdict,
    pub total_usage: Usage,
    pub episode: Option<TotEpisodeLog>,
}

/// FNV-1a over the rendered messages; cheap and stable across runs.
fn digest_messages(messages: &[ChatMessage]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for m in messages {
        eat(&[m.role as u8, 0x1f]);
        eat(m.content.as_bytes());
        eat(&[0x1e]);
    }
    format!("{hash:016x}")
}

fn backend_error_trial(messages: &[ChatMessage], err: &BackendError) -> TrialRecord {
    TrialRecord {
        messages_digest: digest_messages(messages),
        response: String::new(),
        verdict: Verdict::failed(FailureReason::BackendError, err.to_string()),
        usage: Usage::default(),
    }
}

/// Runs one single-message method (CoT or either tree-search format):
/// build messages, call once, score.
pub fn run_single(
    method: Method,
    instance: &PuzzleInstance,
    instance_id: u64,
    setting: &RunSetting,
    backend: &dyn ChatBackend,
    exemplars: Option<&ExemplarSet>,
) -> RunRecord {
    run_trials(method, instance, instance_id, setting, backend, exemplars, 1)
}

/// Issues `self_consistency` independent trials and selects per the
/// setting's rule; usage sums over all trials.
pub fn run_self_consistency(
    method: Method,
    instance: &PuzzleInstance,
    instance_id: u64,
    setting: &RunSetting,
    backend: &dyn ChatBackend,
    exemplars: Option<&ExemplarSet>,
) -> RunRecord {
    run_trials(
        method,
        instance,
        instance_id,
        setting,
        backend,
        exemplars,
        setting.self_consistency.max(1),
    )
}

fn run_trials(
    method: Method,
    instance: &PuzzleInstance,
    instance_id: u64,
    setting: &RunSetting,
    backend: &dyn ChatBackend,
    exemplars: Option<&ExemplarSet>,
    count: u32,
) -> RunRecord {
    debug_assert!(method != Method::Tot, "the tree controller has its own driver");
    let mut trials = Vec::with_capacity(count as usize);
    let mut total_usage = Usage::default();
    match build_messages(method, setting.shot, instance, exemplars) {
        Ok(messages) => {
            for trial_index in 0..count {
                let ctx = CallContext {
                    instance: *instance,
                    instance_id,
                    method,
                    trial_index,
                    call_ordinal: 0,
                };
                let trial = match backend.complete(&messages, &setting.params, &ctx) {
                    Ok(completion) => {
                        let verdict =
                            score_response(instance, &completion.text, method.trace_format());
                        TrialRecord {
                            messages_digest: digest_messages(&messages),
                            response: completion.text,
                            verdict,
                            usage: completion.usage,
                        }
                    }
                    Err(err) => backend_error_trial(&messages, &err),
                };
                total_usage += trial.usage;
                trials.push(trial);
            }
        }
        Err(err) => {
            trials.push(TrialRecord {
                messages_digest: String::new(),
                response: String::new(),
                verdict: Verdict::failed(FailureReason::BackendError, err.to_string()),
                usage: Usage::default(),
            });
        }
    }
    let selected_trial = select_trial(instance, method, setting, &trials);
    let final_verdict = trials[selected_trial].verdict.clone();
    RunRecord {
        kind: instance.kind(),
        instance_id,
        instance: *instance,
        method,
        setting: setting.clone(),
        trials,
        selected_trial,
        final_verdict,
        total_usage,
        episode: None,
    }
}

fn select_trial(
    instance: &PuzzleInstance,
    method: Method,
    setting: &RunSetting,
    trials: &[TrialRecord],
) -> usize {
    match setting.selection {
        SelectionRule::FirstCorrect => trials
            .iter()
            .position(|t| t.verdict.correct)
            .unwrap_or(0),
        SelectionRule::MajorityAnswer => {
            let answers: Vec<Option<String>> = trials
                .iter()
                .map(|t| {
                    let trace =
                        crate::trace::parse_trace(&t.response, method.trace_format(), instance.kind());
                    crate::trace::extract_answer(&trace, instance).map(render_chain_text)
                })
                .collect();
            let mut best = 0usize;
            let mut best_count = 0usize;
            for (i, answer) in answers.iter().enumerate() {
                if answer.is_none() {
                    continue;
                }
                let count = answers.iter().filter(|a| *a == answer).count();
                if count > best_count {
                    best_count = count;
                    best = i;
                }
            }
            best
        }
    }
}

fn render_chain_text(chain: Chain) -> String {
    let mut out = chain.initial;
    for link in chain.links {
        if let Some(op) = link.operation {
            out += &format!(" -> ({op})");
        }
        if let Some(state) = link.state {
            out += &format!(" -> {state}");
        }
    }
    out
}

/// Controller depth per puzzle: one round per move of the longest useful
/// plan.
pub fn tot_depth(instance: &PuzzleInstance) -> u32 {
    match instance {
        PuzzleInstance::DropWater(i) => i.max_steps,
        PuzzleInstance::NumberPath(i) => i.steps,
        PuzzleInstance::Arithmetic(_) => 2,
        PuzzleInstance::MinimalGrass(_) => 3,
    }
}

/// Multi-round propose / vote / keep-top-width controller.
///
/// Each round sends one propose call per kept chain, then `voters` vote
/// calls over all parsed candidates; candidates keep their proposal order on
/// value ties. Any goal-reaching candidate is remembered and scored at the
/// end alongside the surviving chains. Usage sums every call; a backend
/// error aborts the episode with the usage so far.
pub fn run_tot(
    instance: &PuzzleInstance,
    instance_id: u64,
    setting: &RunSetting,
    backend: &dyn ChatBackend,
) -> RunRecord {
    let mut episode = TotEpisodeLog {
        width: setting.tot_width,
        ..TotEpisodeLog::default()
    };
    let mut total_usage = Usage::default();
    let mut ordinal: u32 = 0;
    let mut kept: Vec<Plan> = alloc::vec![Plan {
        moves: Vec::new(),
        states: alloc::vec![instance.initial_state()],
    }];
    let mut goal_plans: Vec<Plan> = Vec::new();
    let mut first_digest: Option<String> = None;
    let mut abort: Option<BackendError> = None;

    'rounds: for round in 0..tot_depth(instance) {
        let mut log = TotRoundLog {
            index: round,
            kept: kept.iter().map(plan_text).collect(),
            proposals: Vec::new(),
            chosen: Vec::new(),
            dropped: 0,
        };
        let mut candidates: Vec<Plan> = Vec::new();
        for chain in &kept {
            let messages = tot_propose_prompt(instance, chain, setting.proposal_cap);
            if first_digest.is_none() {
                first_digest = Some(digest_messages(&messages));
            }
            let ctx = CallContext {
                instance: *instance,
                instance_id,
                method: Method::Tot,
                trial_index: 0,
                call_ordinal: post_increment(&mut ordinal),
            };
            let completion = match backend.complete(&messages, &setting.params, &ctx) {
                Ok(c) => c,
                Err(e) => {
                    abort = Some(e);
                    episode.rounds.push(log);
                    break 'rounds;
                }
            };
            total_usage += completion.usage;
            let (extended, dropped) =
                parse_proposals(instance, chain, &completion.text, setting.proposal_cap);
            log.dropped += dropped;
            candidates.extend(extended);
        }
        if candidates.is_empty() {
            episode.rounds.push(log);
            break;
        }

        let vote_messages = match tot_vote_prompt(instance, &candidates) {
            Ok(m) => m,
            Err(e) => {
                abort = Some(BackendError::Protocol(e.to_string()));
                episode.rounds.push(log);
                break;
            }
        };
        let mut sums = alloc::vec![0.0f64; candidates.len()];
        for _ in 0..setting.voters.max(1) {
            let ctx = CallContext {
                instance: *instance,
                instance_id,
                method: Method::Tot,
                trial_index: 0,
                call_ordinal: post_increment(&mut ordinal),
            };
            let completion = match backend.complete(&vote_messages, &setting.params, &ctx) {
                Ok(c) => c,
                Err(e) => {
                    abort = Some(e);
                    episode.rounds.push(log);
                    break 'rounds;
                }
            };
            total_usage += completion.usage;
            for (k, v) in parse_votes(&completion.text, candidates.len()).into_iter().enumerate() {
                sums[k] += v;
            }
        }
        let voters = setting.voters.max(1) as f64;
        let values: Vec<f64> = sums.into_iter().map(|s| s / voters).collect();

        for (candidate, value) in candidates.iter().zip(&values) {
            let goal_reached = is_goal(instance, candidate.final_state(), candidate.moves.len());
            if goal_reached {
                goal_plans.push(candidate.clone());
            }
            log.proposals.push(TotProposalLog {
                chain: plan_text(candidate),
                value: *value,
                goal_reached,
            });
        }

        // stable sort: ties keep proposal order
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        order.truncate(setting.tot_width);
        order.sort_unstable(); // restore proposal order among the kept
        kept = order.iter().map(|&i| candidates[i].clone()).collect();
        log.chosen = kept.iter().map(plan_text).collect();
        episode.rounds.push(log);
    }

    episode.goal_chains = goal_plans.iter().map(plan_text).collect();

    let final_verdict = match abort {
        Some(err) => Verdict::failed(FailureReason::BackendError, err.to_string()),
        None => {
            let mut verdict: Option<Verdict> = None;
            for plan in goal_plans.iter().chain(kept.iter()) {
                let v = verify_chain(instance, &chain_of_plan(&plan.states, &plan.moves));
                if v.correct {
                    verdict = Some(v);
                    break;
                }
                if verdict.is_none() {
                    verdict = Some(v);
                }
            }
            verdict.unwrap_or_else(|| {
                Verdict::failed(FailureReason::NoSummary, "no chains survived the episode")
            })
        }
    };

    let best_chain_text = episode
        .goal_chains
        .first()
        .cloned()
        .or_else(|| kept.first().map(plan_text))
        .unwrap_or_default();
    let trial = TrialRecord {
        messages_digest: first_digest.unwrap_or_default(),
        response: best_chain_text,
        verdict: final_verdict.clone(),
        usage: total_usage,
    };
    RunRecord {
        kind: instance.kind(),
        instance_id,
        instance: *instance,
        method: Method::Tot,
        setting: setting.clone(),
        trials: alloc::vec![trial],
        selected_trial: 0,
        final_verdict,
        total_usage,
        episode: Some(episode),
    }
}

fn post_increment(counter: &mut u32) -> u32 {
    let v = *counter;
    *counter += 1;
    v
}

fn plan_text(plan: &Plan) -> String {
    if plan.moves.is_empty() {
        render_state(&plan.states[0])
    } else {
        crate::trace::render_chain(&plan.states, &plan.moves, crate::trace::ChainStyle::Summary)
    }
}

/// Parses proposal lines `[current] -> (op) -> [next]` and extends the kept
/// chain by each one; unparseable or illegal lines are dropped and counted.
fn parse_proposals(
    instance: &PuzzleInstance,
    base: &Plan,
    response: &str,
    cap: usize,
) -> (Vec<Plan>, u32) {
    let current = base.states.last().expect("plan has states");
    let current_text = render_state(current);
    let mut out = Vec::new();
    let mut dropped = 0u32;
    for line in response.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if out.len() == cap {
            break;
        }
        let Ok(chain) = parse_chain_line(line) else {
            dropped += 1;
            continue;
        };
        if chain.initial != current_text || chain.links.len() != 1 {
            dropped += 1;
            continue;
        }
        let Some(op_text) = chain.links[0].operation.clone() else {
            dropped += 1;
            continue;
        };
        let Ok(parsed) = parse_operation(instance.kind(), current, &op_text) else {
            dropped += 1;
            continue;
        };
        let Ok(next) = apply_move(instance, current, &parsed.mv) else {
            dropped += 1;
            continue;
        };
        // when the proposal names the resulting state it must be right
        if let Some(claimed) = &chain.links[0].state {
            match crate::puzzles::parse_state(instance.kind(), claimed) {
                Ok(s) if s == next => {}
                _ => {
                    dropped += 1;
                    continue;
                }
            }
        }
        let mut moves = base.moves.clone();
        moves.push(parsed.mv);
        let mut states = base.states.clone();
        states.push(next);
        out.push(Plan { moves, states });
    }
    (out, dropped)
}

/// Per-candidate vote values from one voter reply. Lines may be indexed
/// (`candidate 2: value = 50`) or positional; labels sure/likely/impossible
/// map to 100/50/0; candidates a voter skips contribute 0.
fn parse_votes(response: &str, count: usize) -> Vec<f64> {
    let mut values = alloc::vec![0.0f64; count];
    let mut positional = 0usize;
    for line in response.lines() {
        let line = line.trim().to_ascii_lowercase();
        if line.is_empty() {
            continue;
        }
        let (index, rest) = match line.strip_prefix("candidate") {
            Some(rest) => {
                let rest = rest.trim_start();
                let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
                match rest[..digits].parse::<usize>() {
                    Ok(k) if k >= 1 => (Some(k - 1), rest[digits..].trim_start_matches(':').trim()),
                    _ => (None, rest),
                }
            }
            None => (None, line.as_str()),
        };
        let Some(value) = parse_vote_value(rest) else {
            continue;
        };
        let slot = match index {
            Some(k) => k,
            None => positional,
        };
        positional = slot + 1;
        if slot < count {
            values[slot] = value;
        }
    }
    values
}

fn parse_vote_value(text: &str) -> Option<f64> {
    let text = text.trim();
    if let Some(pos) = text.find("value") {
        let tail = &text[pos + "value".len()..];
        let tail = tail.trim_start().strip_prefix('=')?.trim();
        let digits: String = tail
            .chars()
            .take_while(|c| c.is_ascii_digit() || *c == '.' || *c == '-')
            .collect();
        return digits.parse().ok();
    }
    if text.contains("sure") {
        return Some(100.0);
    }
    if text.contains("likely") {
        return Some(50.0);
    }
    if text.contains("impossible") {
        return Some(0.0);
    }
    None
}

/// Prices per 1000 tokens; no defaults are meaningful, callers supply them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PriceTable {
    pub input_per_1k: f64,
    pub output_per_1k: f64,
}

/// One aggregated report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: PuzzleKind,
    pub method: Method,
    pub shot: Shot,
    pub tier: CostTier,
    pub instances: u64,
    pub correct: u64,
    pub total_input_tokens: u64,
    pub total_output_tokens: u64,
}

impl ReportRow {
    pub fn accuracy_percent(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.correct as f64 * 100.0 / self.instances as f64
        }
    }

    pub fn mean_input_tokens(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.total_input_tokens as f64 / self.instances as f64
        }
    }

    pub fn mean_output_tokens(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.total_output_tokens as f64 / self.instances as f64
        }
    }

    /// Mean fee per instance under the given prices.
    pub fn mean_fee(&self, prices: &PriceTable) -> f64 {
        (self.mean_input_tokens() * prices.input_per_1k
            + self.mean_output_tokens() * prices.output_per_1k)
            / 1000.0
    }
}

/// Aggregates records into rows keyed by (task, method, shot, tier), in
/// canonical order regardless of record order.
pub fn aggregate(records: &[RunRecord]) -> Vec<ReportRow> {
    use alloc::collections::BTreeMap;
    let mut rows: BTreeMap<(PuzzleKind, Method, u8, CostTier), ReportRow> = BTreeMap::new();
    for r in records {
        let shot_key = match r.setting.shot {
            Shot::ZeroShot => 0u8,
            Shot::FewShot => 1u8,
        };
        let key = (r.kind, r.method, shot_key, r.setting.tier);
        let row = rows.entry(key).or_insert_with(|| ReportRow {
            kind: r.kind,
            method: r.method,
            shot: r.setting.shot,
            tier: r.setting.tier,
            instances: 0,
            correct: 0,
            total_input_tokens: 0,
            total_output_tokens: 0,
        });
        row.instances += 1;
        row.correct += r.final_verdict.correct as u64;
        row.total_input_tokens += r.total_usage.input_tokens;
        row.total_output_tokens += r.total_usage.output_tokens;
    }
    rows.into_values().collect()
}

/// Verifies a persisted record's response again without any backend call.
pub fn rescore_record(record: &RunRecord) -> Verdict {
    match record.method {
        Method::Tot => match &record.episode {
            Some(episode) => {
                let last_round = episode.rounds.last();
                let candidates = episode
                    .goal_chains
                    .iter()
                    .chain(last_round.iter().flat_map(|r| r.chosen.iter()));
                let mut verdict: Option<Verdict> = None;
                for text in candidates {
                    match parse_chain_line(text) {
                        Ok(chain) => {
                            let v = verify_chain(&record.instance, &chain);
                            if v.correct {
                                return v;
                            }
                            verdict.get_or_insert(v);
                        }
                        Err(_) => continue,
                    }
                }
                verdict.unwrap_or_else(|| {
                    Verdict::failed(FailureReason::NoSummary, "episode kept no chains")
                })
            }
            None => Verdict::failed(FailureReason::BackendError, "episode log missing"),
        },
        method => {
            let trial = &record.trials[record.selected_trial];
            if trial.verdict.failure_reason == Some(FailureReason::BackendError) {
                return trial.verdict.clone();
            }
            score_response(&record.instance, &trial.response, method.trace_format())
        }
    }
}

/// Usage self-check for persisted records: the total must equal the sum of
/// trial usages (the tree controller's single synthetic trial carries the
/// episode total).
pub fn usage_is_consistent(record: &RunRecord) -> bool {
    let mut sum = Usage::default();
    for t in &record.trials {
        sum += t.usage;
    }
    sum == record.total_usage
}
