use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::AgentConfig;
use crate::envs::{EnvConfig, StickyConfig, DEFAULT_TICK_CAP};
use crate::error::{Error, Result};
use crate::metrics::{DEFAULT_EMA_BETA, DEFAULT_HISTOGRAM_WINDOW};
use crate::primitives::{DurationSet, DEFAULT_TICK_RATE};

/// Which learner a run trains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Options over `actions × durations`, trained on reward net of cost.
    #[default]
    Compute,
    /// Single-tick options, trained on raw task reward.
    Baseline,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Compute => "compute",
            Variant::Baseline => "baseline",
        }
    }
}

/// Where the per-decision cost comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Explicit {
        value: f64,
    },
    /// Average per-tick task return of the fixed-rate baseline over its final window.
    Calibrate {
        #[serde(default)]
        min_cost: f64,
    },
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec::Calibrate { min_cost: 0.0 }
    }
}

pub const DEFAULT_MULTIPLIERS: [f64; 5] = [10.0, 5.0, 1.0, 0.2, 0.1];

fn default_name() -> String {
    "experiment".to_string()
}
fn default_multipliers() -> Vec<f64> {
    DEFAULT_MULTIPLIERS.to_vec()
}
fn default_tick_cap() -> u64 {
    DEFAULT_TICK_CAP
}
fn default_tick_rate() -> f64 {
    DEFAULT_TICK_RATE
}
fn default_beta() -> f64 {
    DEFAULT_EMA_BETA
}
fn default_window() -> usize {
    DEFAULT_HISTOGRAM_WINDOW
}
fn default_trace_episodes() -> usize {
    2
}
/// Sticky actions collapse tabular learning on the default tasks, so experiments start without them.
fn default_sticky() -> StickyConfig {
    StickyConfig::off()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub env: EnvConfig,
    #[serde(default = "default_sticky")]
    pub sticky: StickyConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub durations: DurationSet,
    /// Decisions used for learning, per seed.
    pub budget: u64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    /// Decisions between curve rows; defaults to a hundredth of the budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<u64>,
    /// Baseline budget when calibrating; defaults to `budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_budget: Option<u64>,
    #[serde(default = "default_tick_cap")]
    pub tick_cap: u64,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    #[serde(default = "default_beta")]
    pub ema_beta: f64,
    #[serde(default = "default_window")]
    pub histogram_window: usize,
    /// Per-tick traces kept for this many final training episodes of each run.
    #[serde(default = "default_trace_episodes")]
    pub trace_episodes: usize,
    /// Greedy evaluation episodes after training; zero disables.
    #[serde(default)]
    pub greedy_eval_episodes: usize,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(env: EnvConfig, budget: u64, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            name: default_name(),
            env,
            sticky: default_sticky(),
            agent: AgentConfig::default(),
            variant: Variant::default(),
            durations: DurationSet::default(),
            budget,
            seeds,
            cost: CostSpec::default(),
            multipliers: default_multipliers(),
            checkpoint_interval: None,
            calibration_budget: None,
            tick_cap: DEFAULT_TICK_CAP,
            tick_rate: DEFAULT_TICK_RATE,
            ema_beta: DEFAULT_EMA_BETA,
            histogram_window: DEFAULT_HISTOGRAM_WINDOW,
            trace_episodes: default_trace_episodes(),
            greedy_eval_episodes: 0,
            save_checkpoints: true,
            out_dir: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            return Ok(serde_json::from_str(&text)?);
        }
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::config("budget must be at least one decision"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seed list is empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seed list contains duplicates"));
        }
        if self.multipliers.is_empty() || self.multipliers.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::config("cost multipliers must be positive and finite"));
        }
        match self.cost {
            CostSpec::Explicit { value } if !(value >= 0.0 && value.is_finite()) => {
                return Err(Error::config("explicit cost must be finite and non-negative"));
            }
            CostSpec::Calibrate { min_cost } if !(min_cost >= 0.0 && min_cost.is_finite()) => {
                return Err(Error::config("minimum calibrated cost must be finite and non-negative"));
            }
            _ => {}
        }
        if self.checkpoint_interval == Some(0) || self.calibration_budget == Some(0) {
            return Err(Error::config("checkpoint interval and calibration budget must be positive"));
        }
        if self.tick_cap == 0 || !(self.tick_rate > 0.0) {
            return Err(Error::config("tick cap and tick rate must be positive"));
        }
        if !(self.ema_beta > 0.0 && self.ema_beta < 1.0) {
            return Err(Error::config("ema_beta must lie strictly between 0 and 1"));
        }
        if self.histogram_window == 0 {
            return Err(Error::config("histogram window must be positive"));
        }
        self.env.validate()?;
        self.sticky.validate()?;
        self.agent.validate()
    }

    pub fn checkpoint_interval(&self) -> u64 {
        self.checkpoint_interval.unwrap_or((self.budget / 100).max(1))
    }

    pub fn calibration_budget(&self) -> u64 {
        self.calibration_budget.unwrap_or(self.budget)
    }

    /// Hex SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
