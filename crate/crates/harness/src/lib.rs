//! IO, configuration, the live backend, the parallel suite runner, and
//! report emission around the pure `ats-core` crate.

pub mod config;
pub mod files;
pub mod live;
pub mod report;
pub mod suite;

pub use ats_core as core;
