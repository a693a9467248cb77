//! Value-based learners over the option set.

mod mlp;
mod oracle;
mod qtable;
mod replay;
mod td;

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{EnvDescriptor, EnvState};
use crate::error::{Error, Result};
use crate::exec::OptionTransition;
use crate::primitives::{ControlOption, DurationSet, OptionSet, DEFAULT_GAMMA};

pub use mlp::{clip_grad_norm, Adam, Mlp, TdSample};
pub use oracle::smdp_value_iteration;
pub use qtable::QTable;
pub use replay::ReplayBuffer;
pub use td::{greedy_index, select_option, td_error, td_target, TdError, TieBreak};

/// `Q(s, o)` for every option of a fixed option set.
pub trait QFunction {
    fn num_options(&self) -> usize;

    fn values(&self, state: &EnvState) -> Vec<f64>;

    fn value(&self, state: &EnvState, option_index: usize) -> f64 {
        self.values(state)[option_index]
    }

    fn max_value(&self, state: &EnvState) -> f64 {
        self.values(state).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Linear decay from `start` to `end` over `decay_decisions` decisions, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_decisions: u64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        EpsilonSchedule {
            start: epsilon,
            end: epsilon,
            decay_decisions: 0,
        }
    }

    pub fn at(&self, decisions: u64) -> f64 {
        if decisions >= self.decay_decisions {
            return self.end;
        }
        let frac = decisions as f64 / self.decay_decisions as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Train `updates` times after every `per_decisions` decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateRatio {
    pub updates: u32,
    pub per_decisions: u32,
}

impl Default for UpdateRatio {
    fn default() -> Self {
        UpdateRatio {
            updates: 1,
            per_decisions: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Approximator {
    Tabular {
        #[serde(default)]
        init: f64,
    },
    Mlp {
        hidden: Vec<usize>,
        /// Global gradient-norm ceiling.
        grad_clip: f64,
    },
}

impl Approximator {
    pub fn default_mlp() -> Self {
        Approximator::Mlp {
            hidden: vec![64, 64],
            grad_clip: 1.0,
        }
    }
}

/// Missing keys in a config file fall back to the tabular defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Decisions between target refreshes; `1` bootstraps from the live estimate.
    pub target_sync_period: u64,
    #[serde(default)]
    pub updates_per_decision: UpdateRatio,
    #[serde(default)]
    pub tie_break: TieBreak,
    pub approximator: Approximator,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig::tabular()
    }
}

impl AgentConfig {
    pub fn tabular() -> Self {
        AgentConfig {
            gamma: DEFAULT_GAMMA,
            learning_rate: 0.3,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.02,
                decay_decisions: 20_000,
            },
            buffer_capacity: 10_000,
            batch_size: 32,
            target_sync_period: 1000,
            updates_per_decision: UpdateRatio::default(),
            tie_break: TieBreak::LowestIndex,
            approximator: Approximator::Tabular { init: 0.0 },
        }
    }

    pub fn neural() -> Self {
        AgentConfig {
            learning_rate: 1e-3,
            buffer_capacity: 50_000,
            approximator: Approximator::default_mlp(),
            ..AgentConfig::tabular()
        }
    }

    /// Plain online Q-learning: no replay history, no target lag.
    pub fn online_tabular(learning_rate: f64, epsilon: f64, gamma: f64) -> Self {
        AgentConfig {
            gamma,
            learning_rate,
            epsilon: EpsilonSchedule::constant(epsilon),
            buffer_capacity: 1,
            batch_size: 1,
            target_sync_period: 1,
            updates_per_decision: UpdateRatio::default(),
            tie_break: TieBreak::LowestIndex,
            approximator: Approximator::Tabular { init: 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("agent {name} must be positive")))
            }
        };
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("agent gamma must lie in [0, 1]"));
        }
        positive("learning_rate", self.learning_rate > 0.0)?;
        positive("buffer_capacity", self.buffer_capacity > 0)?;
        positive("batch_size", self.batch_size > 0)?;
        positive("target_sync_period", self.target_sync_period > 0)?;
        positive(
            "updates_per_decision",
            self.updates_per_decision.updates > 0 && self.updates_per_decision.per_decisions > 0,
        )?;
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            return Err(Error::config("epsilon schedule must stay within [0, 1]"));
        }
        if let Approximator::Mlp { hidden, grad_clip } = &self.approximator {
            positive("grad_clip", *grad_clip > 0.0)?;
            positive("hidden layer width", hidden.iter().all(|&h| h > 0))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QModel {
    Table(QTable),
    Mlp(Mlp),
}

impl QFunction for QModel {
    fn num_options(&self) -> usize {
        match self {
            QModel::Table(t) => t.num_options(),
            QModel::Mlp(m) => m.num_options(),
        }
    }

    fn values(&self, state: &EnvState) -> Vec<f64> {
        match self {
            QModel::Table(t) => t.values(state),
            QModel::Mlp(m) => m.values(state),
        }
    }

    fn value(&self, state: &EnvState, option_index: usize) -> f64 {
        match self {
            QModel::Table(t) => t.value(state, option_index),
            QModel::Mlp(m) => m.value(state, option_index),
        }
    }

    fn max_value(&self, state: &EnvState) -> f64 {
        match self {
            QModel::Table(t) => t.max_value(state),
            QModel::Mlp(m) => m.max_value(state),
        }
    }
}

// Independent ChaCha streams carved out of one run seed.
const STREAM_EXPLORE: u64 = 1;
const STREAM_REPLAY: u64 = 2;
const STREAM_INIT: u64 = 3;

pub(crate) fn rng_stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// An ε-greedy learner over an option set, trained from replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    options: OptionSet,
    config: AgentConfig,
    /// Whether the stored reward carries the decision cost.
    charge_cost: bool,
    online: QModel,
    /// `None` when bootstrapping from the live estimate.
    target: Option<QModel>,
    optimizer: Option<Adam>,
    replay: ReplayBuffer,
    explore_rng: ChaCha8Rng,
    decisions: u64,
    updates: u64,
}

impl Agent {
    /// Compute-aware agent over `actions × durations`, trained on reward net of cost.
    pub fn new(config: AgentConfig, env: &EnvDescriptor, durations: DurationSet, seed: u64) -> Result<Self> {
        Agent::build(config, env, durations, seed, true)
    }

    fn build(
        config: AgentConfig,
        env: &EnvDescriptor,
        durations: DurationSet,
        seed: u64,
        charge_cost: bool,
    ) -> Result<Self> {
        config.validate()?;
        let options = OptionSet::new(env.num_actions(), durations)?;
        let (online, optimizer) = match &config.approximator {
            Approximator::Tabular { init } => (
                QModel::Table(QTable::new(env.state_space_size, options.len(), *init)),
                None,
            ),
            Approximator::Mlp { hidden, .. } => {
                let mut rng = rng_stream(seed, STREAM_INIT);
                let net = Mlp::new(env.obs_len, hidden, options.len(), env.obs_scale.clone(), &mut rng);
                let adam = Adam::new(net.num_params(), config.learning_rate);
                (QModel::Mlp(net), Some(adam))
            }
        };
        let target = (config.target_sync_period > 1).then(|| online.clone());
        Ok(Agent {
            replay: ReplayBuffer::new(config.buffer_capacity, rng_stream(seed, STREAM_REPLAY).next_u64_seed()),
            explore_rng: rng_stream(seed, STREAM_EXPLORE),
            options,
            config,
            charge_cost,
            online,
            target,
            optimizer,
            decisions: 0,
            updates: 0,
        })
    }

    pub fn options(&self) -> &OptionSet {
        &self.options
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn charges_cost(&self) -> bool {
        self.charge_cost
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn q(&self) -> &QModel {
        &self.online
    }

    /// The bootstrap network (the live estimate when there is no separate target).
    pub fn q_target(&self) -> &QModel {
        self.target.as_ref().unwrap_or(&self.online)
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.at(self.decisions)
    }

    /// ε-greedy choice at the current schedule position.
    pub fn act(&mut self, state: &EnvState) -> ControlOption {
        let eps = self.epsilon();
        let i = select_option(state, &self.online, &self.options, eps, &mut self.explore_rng, self.config.tie_break);
        self.options.get(i)
    }

    pub fn act_greedy(&self, state: &EnvState) -> ControlOption {
        let i = greedy_index(&self.online.values(state), &self.options, self.config.tie_break);
        self.options.get(i)
    }

    /// Records one decision's transition and performs whatever training the update ratio
    /// schedules for it. Returns the mean `|δ|` of the last update, if any ran.
    pub fn observe(&mut self, transition: OptionTransition) -> Option<f64> {
        self.replay.push(transition);
        self.decisions += 1;
        let mut last = None;
        let ratio = self.config.updates_per_decision;
        if self.decisions % u64::from(ratio.per_decisions) == 0 {
            for _ in 0..ratio.updates {
                let idx = self.replay.sample_indices(self.config.batch_size);
                if idx.is_empty() {
                    break;
                }
                last = Some(self.train_on_replay(&idx));
            }
        }
        if self.target.is_some() && self.decisions % self.config.target_sync_period == 0 {
            self.sync_target();
        }
        last
    }

    pub fn sync_target(&mut self) {
        if let Some(t) = self.target.as_mut() {
            t.clone_from(&self.online);
        }
    }

    fn train_on_replay(&mut self, indices: &[usize]) -> f64 {
        let Agent {
            replay,
            online,
            target,
            optimizer,
            options,
            config,
            updates,
            ..
        } = self;
        let batch: Vec<&OptionTransition> = indices.iter().map(|&i| replay.get(i)).collect();
        *updates += 1;
        update(online, target.as_ref(), optimizer.as_mut(), options, config, &batch)
    }

    /// One update on an explicit batch. Tabular: `Q(s, o) += α δ` per sample, in order.
    /// Network: one optimizer step on the mean squared δ against the target network.
    pub fn train_step(&mut self, batch: &[OptionTransition]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::usage("train_step needs a non-empty batch"));
        }
        let refs: Vec<&OptionTransition> = batch.iter().collect();
        self.updates += 1;
        Ok(update(
            &mut self.online,
            self.target.as_ref(),
            self.optimizer.as_mut(),
            &self.options,
            &self.config,
            &refs,
        ))
    }

    pub fn save_checkpoint<W: Write>(&self, out: W) -> Result<()> {
        let ck = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            agent: self.clone(),
        };
        serde_json::to_writer(out, &ck)?;
        Ok(())
    }

    pub fn load_checkpoint<R: Read>(input: R) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_reader(input)?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(Error::config(format!(
                "checkpoint format {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.format_version
            )));
        }
        Ok(ck.agent)
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    agent: Agent,
}

trait SeedFromStream {
    fn next_u64_seed(self) -> u64;
}

impl SeedFromStream for ChaCha8Rng {
    fn next_u64_seed(mut self) -> u64 {
        rand::RngCore::next_u64(&mut self)
    }
}

fn update(
    online: &mut QModel,
    target: Option<&QModel>,
    optimizer: Option<&mut Adam>,
    options: &OptionSet,
    config: &AgentConfig,
    batch: &[&OptionTransition],
) -> f64 {
    let gamma = config.gamma;
    let mut abs_delta = 0.0;
    match online {
        QModel::Table(table) => {
            for tr in batch {
                let y = match target {
                    Some(t) => td_target(tr, t, gamma),
                    None => td_target(tr, &*table, gamma),
                };
                let k = options.index_of(tr.option).expect("option from this agent");
                let slot = &mut table.row_mut(tr.state.id)[k];
                let delta = y - *slot;
                *slot += config.learning_rate * delta;
                abs_delta += delta.abs();
            }
        }
        QModel::Mlp(net) => {
            let samples: Vec<TdSample> = batch
                .iter()
                .map(|tr| TdSample {
                    features: net.features(&tr.state),
                    option_index: options.index_of(tr.option).expect("option from this agent"),
                    target: match target {
                        Some(t) => td_target(tr, t, gamma),
                        None => td_target(tr, &*net, gamma),
                    },
                })
                .collect();
            for s in &samples {
                abs_delta += (s.target - net.forward(&s.features)[s.option_index]).abs();
            }
            let (_, mut grad) = net.loss_and_grad(&samples);
            if let Approximator::Mlp { grad_clip, .. } = config.approximator {
                clip_grad_norm(&mut grad, grad_clip);
            }
            optimizer
                .expect("network agents carry an optimizer")
                .step(net.params_mut(), &grad);
        }
    }
    abs_delta / batch.len() as f64
}

/// The fixed-rate agent: duration set `{1}` and trained on raw task reward. Cost is still
/// accounted for by whoever runs it, just not fed to learning.
pub fn fixed_rate_baseline(config: AgentConfig, env: &EnvDescriptor, seed: u64) -> Result<Agent> {
    Agent::build(config, env, DurationSet::single_step(), seed, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChainConfig, ChainMdp, Environment};
    use crate::primitives::Duration;

    fn chain_desc() -> EnvDescriptor {
        ChainMdp::new(ChainConfig::default()).unwrap().descriptor()
    }

    fn tr(s: usize, action: usize, tau: u32, reward_sum: f64, s2: usize, terminal: bool) -> OptionTransition {
        OptionTransition {
            state: EnvState { id: s, obs: vec![s as i32] },
            option: ControlOption {
                action,
                duration: Duration::new(tau).unwrap(),
            },
            reward_sum,
            tau_effective: tau,
            next_state: EnvState { id: s2, obs: vec![s2 as i32] },
            terminal,
        }
    }

    #[test]
    fn epsilon_schedule_is_linear_then_flat() {
        let e = EpsilonSchedule {
            start: 1.0,
            end: 0.1,
            decay_decisions: 100,
        };
        assert_eq!(e.at(0), 1.0);
        assert!((e.at(50) - 0.55).abs() < 1e-12);
        assert_eq!(e.at(100), 0.1);
        assert_eq!(e.at(10_000), 0.1);
        assert_eq!(EpsilonSchedule::constant(0.3).at(0), 0.3);
    }

    #[test]
    fn tabular_update_is_local() {
        let cfg = AgentConfig {
            target_sync_period: 1,
            ..AgentConfig::tabular()
        };
        let mut agent = Agent::new(cfg, &chain_desc(), DurationSet::default(), 0).unwrap();
        let before = match agent.q() {
            QModel::Table(t) => t.clone(),
            _ => unreachable!(),
        };
        let t = tr(2, 1, 2, 0.4, 4, false);
        let delta = td_error(&t, agent.options(), agent.q(), agent.q_target(), agent.config().gamma).0;
        agent.train_step(std::slice::from_ref(&t)).unwrap();
        let QModel::Table(after) = agent.q() else { unreachable!() };
        let k = agent.options().index_of(t.option).unwrap();
        for s in 0..6 {
            for o in 0..8 {
                let expected = if (s, o) == (2, k) {
                    before.row(s)[o] + agent.config().learning_rate * delta
                } else {
                    before.row(s)[o]
                };
                assert_eq!(after.row(s)[o], expected);
            }
        }
    }

    #[test]
    fn target_sync_copies_online() {
        let cfg = AgentConfig {
            target_sync_period: 5,
            ..AgentConfig::tabular()
        };
        let mut agent = Agent::new(cfg, &chain_desc(), DurationSet::default(), 1).unwrap();
        for i in 0..5 {
            agent.observe(tr(i % 5, 1, 1, 1.0, (i % 5) + 1, i % 5 == 4));
            if i < 4 {
                assert_ne!(agent.q(), agent.q_target(), "target lags before sync");
            }
        }
        assert_eq!(agent.q(), agent.q_target());
    }

    #[test]
    fn baseline_is_single_step_and_cost_blind() {
        let b = fixed_rate_baseline(AgentConfig::tabular(), &chain_desc(), 0).unwrap();
        assert_eq!(b.options().len(), 2);
        assert!(b.options().iter().all(|o| o.duration.ticks() == 1));
        assert!(!b.charges_cost());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut agent = Agent::new(AgentConfig::neural(), &chain_desc(), DurationSet::default(), 3).unwrap();
        for i in 0..40 {
            let s = i % 5;
            agent.observe(tr(s, i % 2, 1 << (i % 4), 0.1 * i as f64, (s + 1).min(5), s == 4));
        }
        let mut buf = Vec::new();
        agent.save_checkpoint(&mut buf).unwrap();
        let mut restored = Agent::load_checkpoint(&buf[..]).unwrap();
        assert_eq!(restored, agent);
        // Both continue identically.
        let s = EnvState { id: 0, obs: vec![0] };
        for _ in 0..5 {
            assert_eq!(agent.act(&s), restored.act(&s));
        }
        let t = tr(1, 1, 1, 0.5, 2, false);
        assert_eq!(agent.observe(t.clone()), restored.observe(t));
        assert_eq!(restored, agent);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let mut agent = Agent::new(AgentConfig::tabular(), &chain_desc(), DurationSet::default(), 0).unwrap();
        assert!(agent.train_step(&[]).is_err());
    }
}
