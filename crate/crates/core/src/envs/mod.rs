//! Deterministic toy environments driven one tick at a time.
//!
//! Every environment is a pure function of its reset seed and the action sequence fed to
//! it. Rewards returned here are task rewards only; compute cost is charged by the option
//! executor.

mod chain;
mod line_track;
mod sticky;
mod wave_collect;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::primitives::Tick;

pub use chain::{ChainConfig, ChainMdp, LEFT as CHAIN_LEFT, RIGHT as CHAIN_RIGHT};
pub use line_track::{LineTrack, LineTrackConfig};
pub use sticky::{StickyActions, StickyConfig, DEFAULT_REPEAT_PROBABILITY};
pub use wave_collect::{WaveCollect, WaveCollectConfig};

/// Default per-episode tick cap.
pub const DEFAULT_TICK_CAP: u64 = 4000;

/// What the agent sees: a small integer observation plus a dense state id for tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub id: usize,
    pub obs: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next_state: EnvState,
    /// Task reward for this tick. Never includes compute cost.
    pub reward: f64,
    pub terminal: bool,
    /// Base action actually applied (differs from the request under sticky actions).
    pub executed_action: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvDescriptor {
    pub name: String,
    pub action_names: Vec<String>,
    /// Length of `EnvState::obs`.
    pub obs_len: usize,
    /// Largest magnitude each observation entry can take; used to scale network inputs.
    pub obs_scale: Vec<f64>,
    /// Number of distinct state ids; ids are always `< state_space_size`.
    pub state_space_size: usize,
    /// Whether an exact transition model is available for value iteration.
    pub enumerable: bool,
    pub summary: String,
}

impl EnvDescriptor {
    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }
}

/// One possible result of taking an action in an enumerable model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOutcome {
    pub probability: f64,
    pub next_state: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// Exact transition model over state ids.
pub trait TabularModel {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn is_terminal_state(&self, state: usize) -> bool;
    fn outcomes(&self, state: usize, action: usize) -> Vec<ModelOutcome>;
}

pub trait Environment: Send {
    fn descriptor(&self) -> EnvDescriptor;

    /// Puts the environment in its initial state. All later randomness derives from `seed`.
    fn reset(&mut self, seed: u64) -> EnvState;

    /// Advances exactly one tick.
    fn step(&mut self, action: usize) -> Result<StepOutcome>;

    fn state(&self) -> EnvState;

    fn is_terminal(&self) -> bool;

    /// Ticks elapsed since the last reset.
    fn tick(&self) -> Tick;

    /// True while nothing the agent does can affect reward (e.g. between waves).
    fn is_idle(&self) -> bool {
        false
    }

    fn tabular_model(&self) -> Option<&dyn TabularModel> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn descriptor(&self) -> EnvDescriptor {
        (**self).descriptor()
    }
    fn reset(&mut self, seed: u64) -> EnvState {
        (**self).reset(seed)
    }
    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        (**self).step(action)
    }
    fn state(&self) -> EnvState {
        (**self).state()
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
    fn tick(&self) -> Tick {
        (**self).tick()
    }
    fn is_idle(&self) -> bool {
        (**self).is_idle()
    }
    fn tabular_model(&self) -> Option<&dyn TabularModel> {
        (**self).tabular_model()
    }
}

/// Environment selection as it appears in experiment config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    LineTrack(LineTrackConfig),
    WaveCollect(WaveCollectConfig),
    Chain(ChainConfig),
}

impl EnvConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::LineTrack(_) => "line_track",
            EnvConfig::WaveCollect(_) => "wave_collect",
            EnvConfig::Chain(_) => "chain",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvConfig::LineTrack(c) => c.validate(),
            EnvConfig::WaveCollect(c) => c.validate(),
            EnvConfig::Chain(c) => c.validate(),
        }
    }

    /// Builds the environment, wrapped in sticky actions when `sticky.repeat_probability > 0`.
    pub fn build(&self, sticky: StickyConfig) -> Result<Box<dyn Environment>> {
        self.validate()?;
        sticky.validate()?;
        let inner: Box<dyn Environment> = match self {
            EnvConfig::LineTrack(c) => Box::new(LineTrack::new(c.clone())?),
            EnvConfig::WaveCollect(c) => Box::new(WaveCollect::new(c.clone())?),
            EnvConfig::Chain(c) => Box::new(ChainMdp::new(c.clone())?),
        };
        if sticky.repeat_probability > 0.0 {
            Ok(Box::new(StickyActions::new(inner, sticky)?))
        } else {
            Ok(inner)
        }
    }
}

/// Descriptors of the built-in environments at their default parameters.
pub fn env_catalog() -> Vec<EnvDescriptor> {
    vec![
        LineTrack::new(LineTrackConfig::default())
            .expect("default config is valid")
            .descriptor(),
        WaveCollect::new(WaveCollectConfig::default())
            .expect("default config is valid")
            .descriptor(),
        ChainMdp::new(ChainConfig::default())
            .expect("default config is valid")
            .descriptor(),
    ]
}

pub(crate) fn clamp_move(position: usize, action: usize, width: usize) -> usize {
    match action {
        0 => position.saturating_sub(1),
        2 => (position + 1).min(width - 1),
        _ => position,
    }
}
