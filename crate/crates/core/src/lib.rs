//! Core logic for a desk-scale tree-search evaluation harness.
//!
//! Everything in this crate is pure: puzzle semantics and exact brute-force
//! oracles, dataset enumeration and splitting, parsing and scoring of
//! tree-structured search traces, chat-prompt assembly, a deterministic
//! oracle-backed mock chat backend, single-shot / self-consistency / ToT
//! run drivers, and fine-tuning export transforms.
//!
//! File formats, the live HTTP backend, the worker pool, and the CLI live in
//! the companion `ats-harness` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod datasets;
pub mod finetune;
pub mod gateway;
pub mod oracle;
pub mod orchestrator;
pub mod prompts;
pub mod puzzles;
pub mod rational;
pub mod trace;

pub use gateway::{estimate_tokens, ChatBackend, Completion, MockBackend, Usage};
pub use oracle::Plan;
pub use orchestrator::{Method, RunRecord, RunSetting};
pub use puzzles::{PuzzleInstance, PuzzleKind, PuzzleState};
pub use trace::{FailureReason, Verdict};
