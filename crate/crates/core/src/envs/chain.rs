use serde::{Deserialize, Serialize};

use super::{EnvDescriptor, EnvState, Environment, ModelOutcome, StepOutcome, TabularModel};
use crate::error::{Error, Result};
use crate::primitives::Tick;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub length: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { length: 6 }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::config("chain needs at least 2 states"));
        }
        Ok(())
    }
}

/// Deterministic chain: start at the left end, +1 for entering the right end, which is
/// terminal. Moving left from state 0 stays put.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    config: ChainConfig,
    position: usize,
    tick: Tick,
}

impl ChainMdp {
    pub fn new(config: ChainConfig) -> Result<Self> {
        config.validate()?;
        Ok(ChainMdp {
            config,
            position: 0,
            tick: Tick(0),
        })
    }

    fn goal(&self) -> usize {
        self.config.length - 1
    }

    fn transition(&self, state: usize, action: usize) -> (usize, f64, bool) {
        let next = match action {
            RIGHT => state + 1,
            _ => state.saturating_sub(1),
        };
        let terminal = next == self.goal();
        (next, if terminal { 1.0 } else { 0.0 }, terminal)
    }

    fn encode(&self, position: usize) -> EnvState {
        EnvState {
            id: position,
            obs: vec![position as i32],
        }
    }
}

impl Environment for ChainMdp {
    fn descriptor(&self) -> EnvDescriptor {
        EnvDescriptor {
            name: "chain".into(),
            action_names: vec!["left".into(), "right".into()],
            obs_len: 1,
            obs_scale: vec![self.goal() as f64],
            state_space_size: self.config.length,
            enumerable: true,
            summary: format!(
                "{}-state deterministic chain, +1 on reaching the right end",
                self.config.length
            ),
        }
    }

    fn reset(&mut self, _seed: u64) -> EnvState {
        self.position = 0;
        self.tick = Tick(0);
        self.encode(0)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.is_terminal() {
            return Err(Error::StepAfterTerminal);
        }
        if action > RIGHT {
            return Err(Error::usage(format!("chain has 2 actions, got {action}")));
        }
        let (next, reward, terminal) = self.transition(self.position, action);
        self.position = next;
        self.tick = self.tick.next();
        Ok(StepOutcome {
            next_state: self.encode(next),
            reward,
            terminal,
            executed_action: action,
        })
    }

    fn state(&self) -> EnvState {
        self.encode(self.position)
    }

    fn is_terminal(&self) -> bool {
        self.position == self.goal()
    }

    fn tick(&self) -> Tick {
        self.tick
    }

    fn tabular_model(&self) -> Option<&dyn TabularModel> {
        Some(self)
    }
}

impl TabularModel for ChainMdp {
    fn num_states(&self) -> usize {
        self.config.length
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn is_terminal_state(&self, state: usize) -> bool {
        state == self.goal()
    }

    fn outcomes(&self, state: usize, action: usize) -> Vec<ModelOutcome> {
        let (next_state, reward, terminal) = self.transition(state, action);
        vec![ModelOutcome {
            probability: 1.0,
            next_state,
            reward,
            terminal,
        }]
    }
}
