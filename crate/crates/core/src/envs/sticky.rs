use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvDescriptor, EnvState, Environment, StepOutcome, TabularModel};
use crate::error::{Error, Result};
use crate::primitives::Tick;

/// Repeat probability used by the arcade benchmark's sticky actions.
pub const DEFAULT_REPEAT_PROBABILITY: f64 = 0.25;

// Keeps the sticky stream independent of the wrapped environment's own stream.
const STICKY_STREAM: u64 = 0x5713_C4A7_1095_D3E1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StickyConfig {
    pub repeat_probability: f64,
}

impl Default for StickyConfig {
    fn default() -> Self {
        StickyConfig {
            repeat_probability: DEFAULT_REPEAT_PROBABILITY,
        }
    }
}

impl StickyConfig {
    pub fn off() -> Self {
        StickyConfig {
            repeat_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.repeat_probability) {
            return Err(Error::config(format!(
                "repeat_probability must lie in [0, 1], got {}",
                self.repeat_probability
            )));
        }
        Ok(())
    }
}

/// Sticky actions: each tick, with probability `repeat_probability`, the previously
/// executed base action is applied instead of the requested one. The first tick after a
/// reset always honors the request.
///
/// When the probability is positive the last executed action becomes part of the state, so
/// the wrapper appends it to the observation (`-1` before the first tick) and widens the
/// state id space by `num_actions + 1`. A zero probability passes everything through
/// untouched.
#[derive(Debug, Clone)]
pub struct StickyActions<E> {
    inner: E,
    config: StickyConfig,
    num_actions: usize,
    rng: ChaCha8Rng,
    last_action: Option<usize>,
}

impl<E: Environment> StickyActions<E> {
    pub fn new(inner: E, config: StickyConfig) -> Result<Self> {
        config.validate()?;
        let num_actions = inner.descriptor().num_actions();
        Ok(StickyActions {
            inner,
            config,
            num_actions,
            rng: ChaCha8Rng::seed_from_u64(STICKY_STREAM),
            last_action: None,
        })
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    fn augments(&self) -> bool {
        self.config.repeat_probability > 0.0
    }

    fn augment(&self, state: EnvState) -> EnvState {
        if !self.augments() {
            return state;
        }
        let EnvState { id, mut obs } = state;
        let last = self.last_action.map_or(0, |a| a + 1);
        obs.push(self.last_action.map_or(-1, |a| a as i32));
        EnvState {
            id: id * (self.num_actions + 1) + last,
            obs,
        }
    }
}

impl<E: Environment> Environment for StickyActions<E> {
    fn descriptor(&self) -> EnvDescriptor {
        let mut d = self.inner.descriptor();
        if self.augments() {
            d.obs_len += 1;
            d.obs_scale.push(self.num_actions as f64 - 1.0);
            d.state_space_size *= self.num_actions + 1;
            d.enumerable = false;
            d.summary = format!(
                "{} (sticky actions, p = {})",
                d.summary, self.config.repeat_probability
            );
        }
        d
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ STICKY_STREAM);
        self.last_action = None;
        let s = self.inner.reset(seed);
        self.augment(s)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let executed = match self.last_action {
            Some(prev) if self.rng.gen::<f64>() < self.config.repeat_probability => prev,
            _ => action,
        };
        let mut out = self.inner.step(executed)?;
        self.last_action = Some(executed);
        out.executed_action = executed;
        out.next_state = self.augment(out.next_state);
        Ok(out)
    }

    fn state(&self) -> EnvState {
        self.augment(self.inner.state())
    }

    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }

    fn tick(&self) -> Tick {
        self.inner.tick()
    }

    fn is_idle(&self) -> bool {
        self.inner.is_idle()
    }

    fn tabular_model(&self) -> Option<&dyn TabularModel> {
        if self.augments() {
            None
        } else {
            self.inner.tabular_model()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{LineTrack, LineTrackConfig};

    fn line() -> LineTrack {
        LineTrack::new(LineTrackConfig::default()).unwrap()
    }

    fn requests(n: usize) -> Vec<usize> {
        (0..n).map(|i| if i % 2 == 0 { 0 } else { 2 }).collect()
    }

    #[test]
    fn zero_probability_is_transparent() {
        let mut plain = line();
        let mut wrapped = StickyActions::new(line(), StickyConfig::off()).unwrap();
        assert_eq!(plain.reset(3), wrapped.reset(3));
        assert_eq!(plain.descriptor(), wrapped.descriptor());
        for &a in requests(400).iter() {
            if plain.is_terminal() {
                break;
            }
            assert_eq!(plain.step(a).unwrap(), wrapped.step(a).unwrap());
        }
    }

    #[test]
    fn certain_repeat_locks_first_action() {
        let cfg = StickyConfig {
            repeat_probability: 1.0,
        };
        let mut env = StickyActions::new(line(), cfg).unwrap();
        env.reset(1);
        let first = env.step(2).unwrap();
        assert_eq!(first.executed_action, 2);
        for &a in requests(30).iter() {
            if env.is_terminal() {
                break;
            }
            assert_eq!(env.step(a).unwrap().executed_action, 2);
        }
    }

    #[test]
    fn repeat_frequency_matches_probability() {
        // Alternating requests. A repeat is observable whenever the request differs from
        // the previously executed action.
        let cfg = StickyConfig::default();
        let mut env = StickyActions::new(line(), cfg).unwrap();
        let mut seed = 0;
        env.reset(seed);
        let mut prev: Option<usize> = None;
        let mut repeats = 0u64;
        let mut eligible = 0u64;
        let mut i = 0usize;
        while eligible < 1_000_000 {
            if env.is_terminal() {
                seed += 1;
                env.reset(seed);
                prev = None;
            }
            let req = if i % 2 == 0 { 0 } else { 2 };
            i += 1;
            let out = env.step(req).unwrap();
            if let Some(p) = prev {
                if p != req {
                    eligible += 1;
                    if out.executed_action != req {
                        assert_eq!(out.executed_action, p);
                        repeats += 1;
                    }
                }
            }
            prev = Some(out.executed_action);
        }
        let freq = repeats as f64 / eligible as f64;
        assert!((freq - 0.25).abs() < 0.005, "repeat frequency {freq}");
    }

    #[test]
    fn sticky_is_deterministic_given_seed() {
        let mut a = StickyActions::new(line(), StickyConfig::default()).unwrap();
        let mut b = StickyActions::new(line(), StickyConfig::default()).unwrap();
        assert_eq!(a.reset(42), b.reset(42));
        for &r in requests(300).iter() {
            if a.is_terminal() {
                break;
            }
            assert_eq!(a.step(r).unwrap(), b.step(r).unwrap());
        }
    }

    #[test]
    fn augmented_ids_stay_in_range() {
        let mut env = StickyActions::new(line(), StickyConfig::default()).unwrap();
        let d = env.descriptor();
        assert_eq!(d.obs_len, 5);
        let s = env.reset(0);
        assert_eq!(*s.obs.last().unwrap(), -1);
        assert!(s.id < d.state_space_size);
        for &r in requests(200).iter() {
            if env.is_terminal() {
                break;
            }
            let out = env.step(r).unwrap();
            assert!(out.next_state.id < d.state_space_size);
            assert_eq!(*out.next_state.obs.last().unwrap(), out.executed_action as i32);
        }
    }
}
