//! Transforms scored runs into supervised fine-tuning records.
//!
//! Three target shapes: the raw tree text as produced (ATS-tuned), the tree
//! pruned down to its summary chain re-rendered as a step-by-step response
//! (CoT-tuned), and the multi-round episode flattened into one text
//! (ToT-tuned, episodes of width 2 at most). Erroneous runs are filtered
//! out, and every produced target is re-scored before it leaves this module.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gateway::estimate_tokens;
use crate::orchestrator::{Method, RunRecord, TotEpisodeLog};
use crate::puzzles::{render_input_line, render_problem, PuzzleKind};
use crate::trace::{extract_answer, parse_trace, score_response, Chain, TraceFormat};

/// Token-estimate ceiling for flattened episode targets.
pub const TOT_TARGET_TOKEN_CAP: u64 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunedType {
    AtsTuned,
    CotTuned,
    TotTuned,
}

impl TunedType {
    pub fn label(self) -> &'static str {
        match self {
            TunedType::AtsTuned => "ATS-tuned",
            TunedType::CotTuned => "CoT-tuned",
            TunedType::TotTuned => "ToT-tuned",
        }
    }
}

/// One instruction pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub kind: PuzzleKind,
    pub instance_id: u64,
    pub tuned_type: TunedType,
    pub source: Method,
    pub prompt: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("record is not verifier-correct")]
    NotCorrect,
    #[error("source method {0:?} cannot feed this tuned type")]
    SourceMismatch(Method),
    #[error("no answer chain could be extracted")]
    NoChain,
    #[error("episode ran at width {0}, flattening needs width <= 2")]
    WidthTooLarge(usize),
    #[error("episode log missing")]
    NoEpisode,
    #[error("flattened target estimates {0} tokens, above the {TOT_TARGET_TOKEN_CAP} cap")]
    OverLength(u64),
    #[error("exported target failed re-scoring: {0}")]
    TargetRejected(String),
}

/// Keeps only verifier-correct records, in stable order.
pub fn filter_correct(records: &[RunRecord]) -> Vec<&RunRecord> {
    records.iter().filter(|r| r.final_verdict.correct).collect()
}

fn selected_response(record: &RunRecord) -> &str {
    &record.trials[record.selected_trial].response
}

/// Re-scores a produced target under its format; the export-time gate.
fn gate(record: &FinetuneRecord, instance: &crate::puzzles::PuzzleInstance, format: TraceFormat) -> Result<(), ExportError> {
    let verdict = score_response(instance, &record.target, format);
    if verdict.correct {
        Ok(())
    } else {
        Err(ExportError::TargetRejected(format!(
            "{:?}: {}",
            verdict.failure_reason, verdict.details
        )))
    }
}

/// Raw response text as the target, verbatim. Tree-search sources only.
pub fn to_ats_record(record: &RunRecord) -> Result<FinetuneRecord, ExportError> {
    if !record.final_verdict.correct {
        return Err(ExportError::NotCorrect);
    }
    if !matches!(record.method, Method::AtsBfs | Method::AtsDfs) {
        return Err(ExportError::SourceMismatch(record.method));
    }
    let out = FinetuneRecord {
        kind: record.kind,
        instance_id: record.instance_id,
        tuned_type: TunedType::AtsTuned,
        source: record.method,
        prompt: render_problem(&record.instance),
        target: selected_response(record).to_string(),
    };
    gate(&out, &record.instance, record.method.trace_format())?;
    Ok(out)
}

/// Prunes the tree down to the extracted answer chain and re-renders it as
/// numbered steps plus a summary block. The target carries no scenario ids,
/// backtrack markers, or episode headers.
pub fn to_cot_record(record: &RunRecord) -> Result<FinetuneRecord, ExportError> {
    if !record.final_verdict.correct {
        return Err(ExportError::NotCorrect);
    }
    let chain = match record.method {
        Method::Tot => episode_answer_chain(record)?,
        method => {
            let trace = parse_trace(selected_response(record), method.trace_format(), record.kind);
            extract_answer(&trace, &record.instance).ok_or(ExportError::NoChain)?
        }
    };
    let out = FinetuneRecord {
        kind: record.kind,
        instance_id: record.instance_id,
        tuned_type: TunedType::CotTuned,
        source: record.method,
        prompt: render_problem(&record.instance),
        target: render_chain_as_cot(&chain),
    };
    gate(&out, &record.instance, TraceFormat::Cot)?;
    Ok(out)
}

fn episode_answer_chain(record: &RunRecord) -> Result<Chain, ExportError> {
    let episode = record.episode.as_ref().ok_or(ExportError::NoEpisode)?;
    let text = episode
        .goal_chains
        .first()
        .or_else(|| episode.rounds.last().and_then(|r| r.chosen.first()))
        .ok_or(ExportError::NoChain)?;
    crate::trace::parse_chain_line(text).map_err(|_| ExportError::NoChain)
}

fn render_chain_as_cot(chain: &Chain) -> String {
    let mut out = String::new();
    let mut previous = chain.initial.clone();
    for (k, link) in chain.links.iter().enumerate() {
        let op = link.operation.as_deref().unwrap_or("");
        let state = link.state.clone().unwrap_or_default();
        out += &format!("Step {}\n{} -> ({}) -> {}\n\n", k + 1, previous, op, state);
        previous = state;
    }
    out += &format!("Summary\n{}", render_chain_text(chain));
    out
}

fn render_chain_text(chain: &Chain) -> String {
    let mut out = chain.initial.clone();
    for link in &chain.links {
        if let Some(op) = &link.operation {
            out += &format!(" -> ({op})");
        }
        if let Some(state) = &link.state {
            out += &format!(" -> {state}");
        }
    }
    out
}

/// Flattens a multi-round episode into one text: per-round blocks with the
/// current chains, the proposals with their values, and the chosen chains,
/// then a summary block. Episodes must have run at width 2 or less, and the
/// result must fit the token cap.
pub fn to_tot_flat_record(record: &RunRecord) -> Result<FinetuneRecord, ExportError> {
    if !record.final_verdict.correct {
        return Err(ExportError::NotCorrect);
    }
    if record.method != Method::Tot {
        return Err(ExportError::SourceMismatch(record.method));
    }
    let episode = record.episode.as_ref().ok_or(ExportError::NoEpisode)?;
    if episode.width > 2 {
        return Err(ExportError::WidthTooLarge(episode.width));
    }
    let summary = episode_answer_chain(record)?;
    let target = render_flat_episode(record, episode, &summary);
    let tokens = estimate_tokens(&target);
    if tokens > TOT_TARGET_TOKEN_CAP {
        return Err(ExportError::OverLength(tokens));
    }
    let out = FinetuneRecord {
        kind: record.kind,
        instance_id: record.instance_id,
        tuned_type: TunedType::TotTuned,
        source: Method::Tot,
        prompt: render_problem(&record.instance),
        target,
    };
    gate(&out, &record.instance, TraceFormat::TotFlat)?;
    Ok(out)
}

/// Chain renders inside flat blocks keep every path on one physical line;
/// multi-move chains separate their one-move segments with the literal
/// two-byte sequence `\n` followed by a space.
fn flat_chain_line(text: &str) -> String {
    segment_chain(text)
}

fn segment_chain(text: &str) -> String {
    let Ok(chain) = crate::trace::parse_chain_line(text) else {
        return text.to_string();
    };
    if chain.links.len() <= 1 {
        return text.to_string();
    }
    let mut segments: Vec<String> = Vec::new();
    let mut previous = chain.initial.clone();
    for link in &chain.links {
        let mut seg = previous.clone();
        if let Some(op) = &link.operation {
            seg += &format!(" -> ({op})");
        }
        if let Some(state) = &link.state {
            seg += &format!(" -> {state}");
            previous = state.clone();
        }
        segments.push(seg);
    }
    segments.join("\\n ")
}

fn render_flat_episode(record: &RunRecord, episode: &TotEpisodeLog, summary: &Chain) -> String {
    let mut out = String::new();
    for round in &episode.rounds {
        out += &format!("# step = {}\n", round.index);
        out += &format!("The input is {}\n", render_input_line(&record.instance));
        out += "The current states are:\n";
        for kept in &round.kept {
            out += &flat_chain_line(kept);
            out.push('\n');
        }
        out += "From these states, we can achieve these new states:\n";
        for p in &round.proposals {
            out += &format!("{} (value = {})\n", flat_chain_line(&p.chain), p.value);
        }
        out += "Then we choose the new states with largest values:\n";
        for chosen in &round.chosen {
            out += &flat_chain_line(chosen);
            out.push('\n');
        }
        out.push('\n');
    }
    out += "# Summary\n";
    out += &flat_chain_line(&render_chain_text(summary));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockBackend;
    use crate::orchestrator::{run_self_consistency, run_single, run_tot, RunSetting};
    use crate::prompts::Shot;
    use crate::puzzles::{ArithmeticInstance, PuzzleInstance};

    fn arith() -> PuzzleInstance {
        PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 16))
    }

    fn bfs_record() -> RunRecord {
        run_single(
            Method::AtsBfs,
            &arith(),
            7,
            &RunSetting::low_cost(Shot::ZeroShot),
            &MockBackend::default(),
            None,
        )
    }

    fn dfs_record() -> RunRecord {
        run_single(
            Method::AtsDfs,
            &arith(),
            7,
            &RunSetting::low_cost(Shot::ZeroShot),
            &MockBackend::default(),
            None,
        )
    }

    #[test]
    fn filter_keeps_only_correct() {
        let good = bfs_record();
        let mut bad = bfs_record();
        bad.final_verdict = crate::trace::Verdict::failed(
            crate::trace::FailureReason::GoalNotMet,
            "synthetic",
        );
        let records = alloc::vec![good.clone(), bad, good];
        assert_eq!(filter_correct(&records).len(), 2);
        assert!(filter_correct(&[]).is_empty());
    }

    #[test]
    fn ats_target_is_verbatim() {
        let record = bfs_record();
        let out = to_ats_record(&record).unwrap();
        assert_eq!(out.target, record.trials[0].response);
        assert_eq!(out.tuned_type, TunedType::AtsTuned);
    }

    #[test]
    fn ats_rejects_cot_source() {
        let record = run_single(
            Method::Cot,
            &arith(),
            7,
            &RunSetting::low_cost(Shot::ZeroShot),
            &MockBackend::default(),
            None,
        );
        assert!(matches!(
            to_ats_record(&record),
            Err(ExportError::SourceMismatch(Method::Cot))
        ));
    }

    #[test]
    fn cot_target_prunes_tree_markers() {
        for record in [bfs_record(), dfs_record()] {
            let out = to_cot_record(&record).unwrap();
            assert!(!out.target.contains("scenario"));
            assert!(!out.target.contains("step back"));
            assert!(!out.target.contains("# step"));
            assert!(out.target.contains("Summary"));
            assert!(
                score_response(&record.instance, &out.target, TraceFormat::Cot).correct
            );
        }
    }

    #[test]
    fn flatten_requires_narrow_episodes() {
        let narrow = RunSetting {
            tot_width: 2,
            ..RunSetting::low_cost(Shot::ZeroShot)
        };
        let record = run_tot(&arith(), 7, &narrow, &MockBackend::default());
        let out = to_tot_flat_record(&record).unwrap();
        assert!(out.target.starts_with("# step = 0\n"));
        assert!(out.target.contains("The current states are:"));
        assert!(out.target.contains("(value = 100)"));
        assert!(out.target.contains("Then we choose the new states with largest values:"));
        assert!(out.target.contains("# Summary"));
        assert!(estimate_tokens(&out.target) <= TOT_TARGET_TOKEN_CAP);

        let wide = RunSetting {
            tot_width: 5,
            ..RunSetting::low_cost(Shot::ZeroShot)
        };
        let record = run_tot(&arith(), 7, &wide, &MockBackend::default());
        assert!(matches!(
            to_tot_flat_record(&record),
            Err(ExportError::WidthTooLarge(5))
        ));
    }

    #[test]
    fn flattened_target_rescored_as_flat_trace() {
        let narrow = RunSetting {
            tot_width: 2,
            ..RunSetting::low_cost(Shot::ZeroShot)
        };
        let record = run_tot(&arith(), 7, &narrow, &MockBackend::default());
        let out = to_tot_flat_record(&record).unwrap();
        assert!(score_response(&record.instance, &out.target, TraceFormat::TotFlat).correct);
    }

    #[test]
    fn incorrect_records_are_rejected() {
        let mut record = bfs_record();
        record.final_verdict =
            crate::trace::Verdict::failed(crate::trace::FailureReason::GoalNotMet, "x");
        assert!(matches!(to_ats_record(&record), Err(ExportError::NotCorrect)));
        assert!(matches!(to_cot_record(&record), Err(ExportError::NotCorrect)));
    }

    #[test]
    fn cot_from_self_consistency_uses_selected_trial() {
        let setting = RunSetting::high_cost(Shot::ZeroShot);
        let record = run_self_consistency(
            Method::AtsBfs,
            &arith(),
            3,
            &setting,
            &MockBackend::default(),
            None,
        );
        let out = to_cot_record(&record).unwrap();
        assert!(out.target.contains("[16]"));
    }
}
