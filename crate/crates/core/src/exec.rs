//! Running options against an environment.
//!
//! An option repeats its base action for up to `τ` ticks. The decision that selected it is
//! charged once, on its first tick; the ticks it runs for are free. Each executed option
//! becomes one [`OptionTransition`] carrying the discounted task reward over the ticks it
//! actually ran, minus the decision cost.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::envs::{EnvState, Environment};
use crate::error::{Error, Result};
use crate::primitives::{cost_at_tick, discounted_sum, ComputeCostModel, ControlOption};

/// Replay record for one executed option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionTransition {
    pub state: EnvState,
    pub option: ControlOption,
    /// `Σ γ^(i-1) r_(t+i)` over the ticks that ran, with the decision cost already subtracted.
    pub reward_sum: f64,
    /// Ticks the option actually ran; below `option.duration` only if the episode ended or
    /// hit its tick cap mid-option.
    pub tau_effective: u32,
    pub next_state: EnvState,
    /// True termination only. Tick-cap truncation leaves this false.
    pub terminal: bool,
}

/// One line of an execution trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub decision: bool,
    pub action: usize,
    pub reward: f64,
    pub cost: f64,
    /// Environment reported nothing to do on this tick.
    #[serde(default)]
    pub idle: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub records: Vec<TickRecord>,
}

impl ExecutionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn decisions(&self) -> u64 {
        self.records.iter().filter(|r| r.decision).count() as u64
    }

    pub fn task_return(&self) -> f64 {
        self.records.iter().map(|r| r.reward).sum()
    }

    pub fn decision_indicators(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.decision).collect()
    }

    /// Checks that every tick emitted exactly the scheduled cost and that the number of
    /// charged ticks is `decisions`. When this holds the total emitted cost is `c × decisions`.
    pub fn audit_costs(&self, model: &ComputeCostModel, decisions: u64) -> Result<(), String> {
        for r in &self.records {
            let expected = cost_at_tick(r.decision, model);
            if r.cost.to_bits() != expected.to_bits() {
                return Err(format!(
                    "tick {} emitted cost {} but the schedule says {}",
                    r.tick, r.cost, expected
                ));
            }
        }
        let charged = self.decisions();
        if charged != decisions {
            return Err(format!("{charged} charged ticks but {decisions} decisions"));
        }
        Ok(())
    }

    /// One JSON object per tick.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::io("<trace>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Ok(ExecutionTrace { records })
    }
}

/// Executes options with a fixed discount and cost.
///
/// `charge_cost` decides whether the cost is subtracted from the stored `reward_sum`. The
/// trace always records the scheduled cost, so accounting is identical either way; agents
/// trained on raw task reward use `charge_cost = false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionExecutor {
    pub gamma: f64,
    pub cost: ComputeCostModel,
    pub charge_cost: bool,
}

impl OptionExecutor {
    pub fn new(gamma: f64, cost: ComputeCostModel) -> Self {
        OptionExecutor {
            gamma,
            cost,
            charge_cost: true,
        }
    }

    /// Runs `option` for at most `min(τ, max_ticks)` ticks, appending tick records to
    /// `trace`.
    pub fn execute_into<E: Environment + ?Sized>(
        &self,
        env: &mut E,
        option: ControlOption,
        max_ticks: u64,
        trace: &mut Vec<TickRecord>,
    ) -> Result<OptionTransition> {
        if env.is_terminal() {
            return Err(Error::StepAfterTerminal);
        }
        if max_ticks == 0 {
            return Err(Error::usage("option executed with no ticks left"));
        }
        let state = env.state();
        let limit = u64::from(option.duration.ticks()).min(max_ticks);
        let mut rewards = Vec::with_capacity(limit as usize);
        let mut next_state = state.clone();
        let mut terminal = false;
        for i in 0..limit {
            let tick = env.tick().0;
            let idle = env.is_idle();
            let out = env.step(option.action)?;
            let decision = i == 0;
            trace.push(TickRecord {
                tick,
                decision,
                action: out.executed_action,
                reward: out.reward,
                cost: cost_at_tick(decision, &self.cost),
                idle,
            });
            rewards.push(out.reward);
            next_state = out.next_state;
            if out.terminal {
                terminal = true;
                break;
            }
        }
        let charged = if self.charge_cost { self.cost.cost() } else { 0.0 };
        Ok(OptionTransition {
            state,
            option,
            reward_sum: discounted_sum(&rewards, self.gamma)? - charged,
            tau_effective: rewards.len() as u32,
            next_state,
            terminal,
        })
    }
}

/// Executes one option to completion (or to episode end) and returns the stored
/// transition together with its per-tick trace.
pub fn execute_option<E: Environment + ?Sized>(
    env: &mut E,
    option: ControlOption,
    gamma: f64,
    cost_model: ComputeCostModel,
) -> Result<(OptionTransition, ExecutionTrace)> {
    let mut records = Vec::new();
    let tr = OptionExecutor::new(gamma, cost_model).execute_into(env, option, u64::MAX, &mut records)?;
    Ok((tr, ExecutionTrace { records }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTotals {
    /// Undiscounted task return.
    pub task_return: f64,
    /// `c × decisions`.
    pub total_cost: f64,
    pub decisions: u64,
    pub ticks: u64,
    /// Ended by the environment, as opposed to the tick cap.
    pub terminal: bool,
}

impl EpisodeTotals {
    pub fn net_return(&self) -> f64 {
        self.task_return - self.total_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub transitions: Vec<OptionTransition>,
    pub trace: ExecutionTrace,
    pub totals: EpisodeTotals,
}

/// Incremental episode driver: one option per call to [`EpisodeRunner::step`].
///
/// The training loop interleaves learning between options, so it drives this directly;
/// [`run_episode`] is the closed-loop wrapper.
#[derive(Debug, Clone)]
pub struct EpisodeRunner {
    executor: OptionExecutor,
    tick_cap: u64,
    trace: Vec<TickRecord>,
    totals: EpisodeTotals,
    record_trace: bool,
}

impl EpisodeRunner {
    pub fn new(executor: OptionExecutor, tick_cap: u64) -> Self {
        EpisodeRunner {
            executor,
            tick_cap,
            trace: Vec::new(),
            totals: EpisodeTotals::default(),
            record_trace: true,
        }
    }

    /// Skip keeping per-tick records; totals are still maintained.
    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }

    pub fn executor(&self) -> &OptionExecutor {
        &self.executor
    }

    pub fn begin<E: Environment + ?Sized>(&mut self, env: &mut E, seed: u64) -> EnvState {
        self.trace.clear();
        self.totals = EpisodeTotals::default();
        env.reset(seed)
    }

    pub fn finished<E: Environment + ?Sized>(&self, env: &E) -> bool {
        env.is_terminal() || self.totals.ticks >= self.tick_cap
    }

    pub fn step<E: Environment + ?Sized>(&mut self, env: &mut E, option: ControlOption) -> Result<OptionTransition> {
        if self.finished(env) {
            return Err(Error::usage("episode already finished"));
        }
        let start = self.trace.len();
        let remaining = self.tick_cap - self.totals.ticks;
        let tr = self.executor.execute_into(env, option, remaining, &mut self.trace)?;
        for r in &self.trace[start..] {
            self.totals.task_return += r.reward;
        }
        if !self.record_trace {
            self.trace.truncate(start);
        }
        self.totals.decisions += 1;
        self.totals.ticks += u64::from(tr.tau_effective);
        self.totals.total_cost = self.executor.cost.cost() * self.totals.decisions as f64;
        self.totals.terminal = tr.terminal;
        Ok(tr)
    }

    pub fn totals(&self) -> EpisodeTotals {
        self.totals
    }

    pub fn take_trace(&mut self) -> ExecutionTrace {
        ExecutionTrace {
            records: std::mem::take(&mut self.trace),
        }
    }
}

/// Resets `env` with `seed` and executes options chosen by `policy` until the episode
/// terminates or `tick_cap` ticks have elapsed.
pub fn run_episode<E, P>(
    env: &mut E,
    seed: u64,
    mut policy: P,
    gamma: f64,
    cost_model: ComputeCostModel,
    tick_cap: u64,
) -> Result<EpisodeRecord>
where
    E: Environment + ?Sized,
    P: FnMut(&EnvState) -> ControlOption,
{
    let mut runner = EpisodeRunner::new(OptionExecutor::new(gamma, cost_model), tick_cap);
    let mut state = runner.begin(env, seed);
    let mut transitions = Vec::new();
    while !runner.finished(env) {
        let option = policy(&state);
        let tr = runner.step(env, option)?;
        state = tr.next_state.clone();
        transitions.push(tr);
    }
    Ok(EpisodeRecord {
        transitions,
        totals: runner.totals(),
        trace: runner.take_trace(),
    })
}
