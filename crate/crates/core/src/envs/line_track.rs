use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clamp_move, EnvDescriptor, EnvState, Environment, StepOutcome};
use crate::error::{Error, Result};
use crate::primitives::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineTrackConfig {
    /// Number of paddle columns.
    pub width: usize,
    /// Ticks from serve until the ball reaches the paddle row.
    pub descent_ticks: u32,
    /// Misses allowed before the episode ends.
    pub miss_budget: u32,
}

impl Default for LineTrackConfig {
    fn default() -> Self {
        LineTrackConfig {
            width: 9,
            descent_ticks: 24,
            miss_budget: 3,
        }
    }
}

impl LineTrackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 {
            return Err(Error::config("line_track width must be at least 2"));
        }
        if (self.descent_ticks as usize) < self.width - 1 {
            return Err(Error::config(
                "line_track descent_ticks must allow the paddle to cross the field",
            ));
        }
        if self.miss_budget == 0 {
            return Err(Error::config("line_track miss_budget must be at least 1"));
        }
        Ok(())
    }
}

/// Single-paddle catch game.
///
/// A ball is served toward a landing column drawn uniformly at serve time and reaches the
/// paddle row `descent_ticks` ticks later. The paddle moves one column per tick
/// (left / stay / right). Catching scores +1 and misses score -1; either way a new ball is
/// served, until the miss budget runs out.
///
/// Observation: `[paddle, landing, ticks_to_arrival, misses_left]`. The state id is a
/// bijection on that tuple.
#[derive(Debug, Clone)]
pub struct LineTrack {
    config: LineTrackConfig,
    rng: ChaCha8Rng,
    paddle: usize,
    landing: usize,
    ticks_to_arrival: u32,
    misses: u32,
    serves: u64,
    tick: Tick,
}

impl LineTrack {
    pub fn new(config: LineTrackConfig) -> Result<Self> {
        config.validate()?;
        let mut env = LineTrack {
            paddle: config.width / 2,
            landing: 0,
            ticks_to_arrival: config.descent_ticks,
            misses: 0,
            serves: 0,
            tick: Tick(0),
            rng: ChaCha8Rng::seed_from_u64(0),
            config,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn config(&self) -> &LineTrackConfig {
        &self.config
    }

    /// Balls served so far this episode, including the one in flight.
    pub fn serves(&self) -> u64 {
        self.serves
    }

    fn serve(&mut self) {
        self.landing = self.rng.gen_range(0..self.config.width);
        self.ticks_to_arrival = self.config.descent_ticks;
        self.serves += 1;
    }

    fn misses_left(&self) -> u32 {
        self.config.miss_budget - self.misses
    }

    fn encode(&self) -> EnvState {
        let w = self.config.width;
        let h = self.config.descent_ticks as usize;
        let m = self.config.miss_budget as usize + 1;
        let id = ((self.paddle * w + self.landing) * h + (self.ticks_to_arrival as usize - 1)) * m
            + self.misses_left() as usize;
        EnvState {
            id,
            obs: vec![
                self.paddle as i32,
                self.landing as i32,
                self.ticks_to_arrival as i32,
                self.misses_left() as i32,
            ],
        }
    }
}

impl Environment for LineTrack {
    fn descriptor(&self) -> EnvDescriptor {
        let c = &self.config;
        EnvDescriptor {
            name: "line_track".into(),
            action_names: vec!["left".into(), "stay".into(), "right".into()],
            obs_len: 4,
            obs_scale: vec![
                (c.width - 1) as f64,
                (c.width - 1) as f64,
                c.descent_ticks as f64,
                c.miss_budget as f64,
            ],
            state_space_size: c.width * c.width * c.descent_ticks as usize * (c.miss_budget as usize + 1),
            enumerable: false,
            summary: format!(
                "{}-column catch game, {}-tick descent, ends after {} misses",
                c.width, c.descent_ticks, c.miss_budget
            ),
        }
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.paddle = self.config.width / 2;
        self.misses = 0;
        self.serves = 0;
        self.tick = Tick(0);
        self.serve();
        self.encode()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.is_terminal() {
            return Err(Error::StepAfterTerminal);
        }
        if action > 2 {
            return Err(Error::usage(format!("line_track has 3 actions, got {action}")));
        }
        self.paddle = clamp_move(self.paddle, action, self.config.width);
        self.ticks_to_arrival -= 1;
        self.tick = self.tick.next();

        let mut reward = 0.0;
        if self.ticks_to_arrival == 0 {
            if self.paddle == self.landing {
                reward = 1.0;
            } else {
                reward = -1.0;
                self.misses += 1;
            }
            if self.is_terminal() {
                // Keep the encoding in range; nothing is in flight any more.
                self.ticks_to_arrival = 1;
            } else {
                self.serve();
            }
        }
        Ok(StepOutcome {
            next_state: self.encode(),
            reward,
            terminal: self.is_terminal(),
            executed_action: action,
        })
    }

    fn state(&self) -> EnvState {
        self.encode()
    }

    fn is_terminal(&self) -> bool {
        self.misses >= self.config.miss_budget
    }

    fn tick(&self) -> Tick {
        self.tick
    }
}
