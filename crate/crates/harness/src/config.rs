//! Declarative run configuration: one TOML file, unknown keys rejected,
//! command-line flags win over file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ats_core::gateway::{CorruptionMode, MockConfig};
use ats_core::orchestrator::{CostTier, Method, PriceTable, RunSetting, SelectionRule};
use ats_core::prompts::{ExemplarConfig, Shot};
use ats_core::puzzles::PuzzleKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "all_shots")]
    pub shots: Vec<Shot>,
    #[serde(default = "all_tiers")]
    pub tiers: Vec<CostTier>,
    #[serde(default = "all_kinds")]
    pub kinds: Vec<PuzzleKind>,
    /// Cap on test instances per puzzle; 0 means the full test set.
    #[serde(default)]
    pub max_instances: usize,
    #[serde(default)]
    pub selection: SelectionRule,
    pub backend: BackendConfig,
    #[serde(default)]
    pub prices: PriceTable,
    #[serde(default)]
    pub exemplars: ExemplarSettings,
}

fn default_seed() -> u64 {
    42
}

fn default_concurrency() -> usize {
    4
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn all_shots() -> Vec<Shot> {
    vec![Shot::ZeroShot, Shot::FewShot]
}

fn all_tiers() -> Vec<CostTier> {
    vec![CostTier::Low, CostTier::High]
}

fn all_kinds() -> Vec<PuzzleKind> {
    PuzzleKind::ALL.to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "type")]
pub enum BackendConfig {
    Mock(MockSection),
    Live(LiveSection),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct MockSection {
    #[serde(default)]
    pub error_rate: f64,
    #[serde(default = "default_corruption")]
    pub corruption_mode: CorruptionMode,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_branch_cap")]
    pub branch_cap: usize,
    #[serde(default = "default_detours")]
    pub detour_count: usize,
}

fn default_corruption() -> CorruptionMode {
    CorruptionMode::WrongAnswer
}

fn default_branch_cap() -> usize {
    3
}

fn default_detours() -> usize {
    2
}

impl MockSection {
    pub fn to_mock_config(&self) -> MockConfig {
        MockConfig {
            error_rate: self.error_rate,
            corruption_mode: self.corruption_mode,
            master_seed: self.master_seed,
            branch_cap: self.branch_cap,
            detour_count: self.detour_count,
        }
    }
}

impl Default for MockSection {
    fn default() -> Self {
        MockSection {
            error_rate: 0.0,
            corruption_mode: default_corruption(),
            master_seed: 0,
            branch_cap: default_branch_cap(),
            detour_count: default_detours(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct LiveSection {
    pub base_url: String,
    pub model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

fn default_rpm() -> u32 {
    60
}

fn default_in_flight() -> usize {
    4
}

fn default_attempts() -> u32 {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct ExemplarSettings {
    #[serde(default = "default_exemplar_count")]
    pub count: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_branch_cap")]
    pub branch_cap: usize,
    #[serde(default = "default_frontier_cap")]
    pub frontier_cap: usize,
    #[serde(default = "default_detours")]
    pub detour_count: usize,
}

fn default_exemplar_count() -> usize {
    4
}

fn default_frontier_cap() -> usize {
    6
}

impl Default for ExemplarSettings {
    fn default() -> Self {
        ExemplarSettings {
            count: default_exemplar_count(),
            seed: default_seed(),
            branch_cap: default_branch_cap(),
            frontier_cap: default_frontier_cap(),
            detour_count: default_detours(),
        }
    }
}

impl ExemplarSettings {
    pub fn to_exemplar_config(&self) -> ExemplarConfig {
        ExemplarConfig {
            branch_cap: self.branch_cap,
            frontier_cap: self.frontier_cap,
            detour_count: self.detour_count,
        }
    }
}

impl RunConfig {
    /// Loads and validates; every problem is reported, not just the first.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let problems = config.validate();
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(ConfigError::Invalid {
                path: path.display().to_string(),
                message: problems.join("; "),
            })
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.methods.is_empty() {
            problems.push("methods list is empty".to_string());
        }
        if self.shots.is_empty() {
            problems.push("shots list is empty".to_string());
        }
        if self.tiers.is_empty() {
            problems.push("tiers list is empty".to_string());
        }
        if self.kinds.is_empty() {
            problems.push("kinds list is empty".to_string());
        }
        if self.concurrency == 0 {
            problems.push("concurrency must be at least 1".to_string());
        }
        if let BackendConfig::Mock(m) = &self.backend {
            if !(0.0..=1.0).contains(&m.error_rate) {
                problems.push(format!("error_rate {} outside [0, 1]", m.error_rate));
            }
        }
        if let BackendConfig::Live(l) = &self.backend {
            if l.requests_per_minute == 0 {
                problems.push("requests_per_minute must be at least 1".to_string());
            }
            if l.max_attempts == 0 {
                problems.push("max_attempts must be at least 1".to_string());
            }
        }
        problems
    }

    /// The experiment arms this config asks for, in canonical order.
    pub fn settings(&self) -> Vec<RunSetting> {
        let mut out = Vec::new();
        for &shot in &self.shots {
            for &tier in &self.tiers {
                let mut setting = match tier {
                    CostTier::Low => RunSetting::low_cost(shot),
                    CostTier::High => RunSetting::high_cost(shot),
                };
                setting.selection = self.selection;
                out.push(setting);
            }
        }
        out
    }
}
