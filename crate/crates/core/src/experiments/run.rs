//! One seed of training under a fixed decision budget.

use std::collections::VecDeque;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Variant};
use crate::agents::{fixed_rate_baseline, rng_stream, Agent};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::exec::{EpisodeRunner, ExecutionTrace, OptionExecutor};
use crate::metrics::{DecisionLedger, EpisodeScore, ScoreWindow, SeedScore};
use crate::primitives::{ComputeCostModel, ControlOption};

const STREAM_EPISODES: u64 = 4;
const STREAM_EVAL: u64 = 5;

/// Everything that determines one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub config: ExperimentConfig,
    pub variant: Variant,
    pub cost: f64,
    pub seed: u64,
    pub budget: u64,
}

impl RunSpec {
    pub fn new(config: &ExperimentConfig, variant: Variant, cost: f64, seed: u64) -> Self {
        RunSpec {
            budget: config.budget,
            config: config.clone(),
            variant,
            cost,
            seed,
        }
    }
}

/// Window statistics at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub decisions: u64,
    /// Ticks elapsed while making those decisions.
    pub ticks: u64,
    pub hz: f64,
    pub hz_100: Option<f64>,
    pub task_return_100: Option<f64>,
    pub net_return_100: Option<f64>,
    pub episodes: u64,
}

/// One line of `episodes.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub episode: u64,
    pub task_return: f64,
    pub total_cost: f64,
    pub net_return: f64,
    pub decisions: u64,
    pub ticks: u64,
    pub hz: f64,
    pub terminal: bool,
    /// Decisions of this episode that counted against the budget and were learned from.
    pub trained_decisions: u64,
}

/// The light part of a run: what tables and comparisons need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub variant: Variant,
    pub cost: f64,
    /// Decisions learned from and the ticks they spanned.
    pub training: DecisionLedger,
    /// All ticks, including the bookkeeping tail after the budget ran out.
    pub total_ticks: u64,
    pub episodes: u64,
    pub final_score: Option<SeedScore>,
    pub curve: Vec<CurvePoint>,
    pub audit_failures: Vec<String>,
}

impl RunSummary {
    /// Rate over the decisions between two budget fractions, read off the checkpoint grid.
    pub fn interval_hz(&self, from: f64, to: f64) -> Option<f64> {
        let at = |frac: f64| -> Option<(u64, u64)> {
            if frac <= 0.0 {
                return Some((0, 0));
            }
            let target = (frac * self.training.decisions() as f64).round() as u64;
            self.curve
                .iter()
                .find(|p| p.decisions >= target)
                .map(|p| (p.decisions, p.ticks))
        };
        let (d0, t0) = at(from)?;
        let (d1, t1) = at(to)?;
        (t1 > t0).then(|| self.training.tick_rate() * (d1 - d0) as f64 / (t1 - t0) as f64)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub episodes: Vec<EpisodeLog>,
    /// Traces of the final training episodes, with their episode numbers.
    pub traces: Vec<(u64, ExecutionTrace)>,
    pub eval: Vec<(EpisodeLog, ExecutionTrace)>,
    pub agent: Agent,
}

/// Trains one agent for exactly `spec.budget` decisions.
///
/// When the budget runs out mid-episode the episode is played to its end with the same
/// policy for bookkeeping, but those decisions are neither learned from nor counted in
/// the training ledger.
pub fn train_run(spec: &RunSpec) -> Result<RunOutput> {
    let cfg = &spec.config;
    if spec.budget == 0 {
        return Err(Error::config("budget must be at least one decision"));
    }
    let mut env = cfg.env.build(cfg.sticky)?;
    let desc = env.descriptor();
    let mut agent = match spec.variant {
        Variant::Compute => Agent::new(cfg.agent.clone(), &desc, cfg.durations.clone(), spec.seed)?,
        Variant::Baseline => fixed_rate_baseline(cfg.agent.clone(), &desc, spec.seed)?,
    };
    let cost = ComputeCostModel::new(spec.cost)?;
    let executor = OptionExecutor {
        gamma: agent.config().gamma,
        cost,
        charge_cost: agent.charges_cost(),
    };
    let mut runner = EpisodeRunner::new(executor, cfg.tick_cap);
    let mut episode_seeds = rng_stream(spec.seed, STREAM_EPISODES);
    let interval = cfg.checkpoint_interval();

    let mut used = 0u64;
    let mut used_ticks = 0u64;
    let mut total_ticks = 0u64;
    let mut window = ScoreWindow::default();
    let mut curve = Vec::with_capacity((spec.budget / interval) as usize + 1);
    let mut episodes = Vec::new();
    let mut traces: VecDeque<(u64, ExecutionTrace)> = VecDeque::new();
    let mut audit_failures = Vec::new();

    while used < spec.budget {
        let episode = episodes.len() as u64;
        let mut state = runner.begin(&mut *env, episode_seeds.next_u64());
        let mut trained = 0u64;
        let mut tau_sum = 0u64;
        while !runner.finished(&*env) {
            let option = agent.act(&state);
            let tr = runner.step(&mut *env, option)?;
            tau_sum += u64::from(tr.tau_effective);
            state = tr.next_state.clone();
            if used < spec.budget {
                used += 1;
                used_ticks += u64::from(tr.tau_effective);
                trained += 1;
                agent.observe(tr);
                if used % interval == 0 || used == spec.budget {
                    curve.push(checkpoint(used, used_ticks, &window, episode, cfg.tick_rate));
                }
            }
        }
        let totals = runner.totals();
        let trace = runner.take_trace();
        if let Err(e) = trace.audit_costs(&cost, totals.decisions) {
            audit_failures.push(format!("seed {} episode {episode}: {e}", spec.seed));
        }
        if tau_sum != totals.ticks || trace.len() as u64 != totals.ticks {
            audit_failures.push(format!(
                "seed {} episode {episode}: effective durations sum to {tau_sum} over {} ticks",
                spec.seed, totals.ticks
            ));
        }
        total_ticks += totals.ticks;
        window.push(EpisodeScore {
            task_return: totals.task_return,
            net_return: totals.net_return(),
            decisions: totals.decisions,
            ticks: totals.ticks,
        });
        episodes.push(episode_log(spec.seed, episode, &totals, trained, cfg.tick_rate));
        if cfg.trace_episodes > 0 {
            if traces.len() == cfg.trace_episodes {
                traces.pop_front();
            }
            traces.push_back((episode, trace));
        }
    }

    let eval = greedy_eval(&agent, &mut *env, executor, spec, cfg.greedy_eval_episodes)?;

    Ok(RunOutput {
        summary: RunSummary {
            seed: spec.seed,
            variant: spec.variant,
            cost: spec.cost,
            training: DecisionLedger::from_counts(used, used_ticks, cfg.tick_rate)?,
            total_ticks,
            episodes: episodes.len() as u64,
            final_score: SeedScore::from_window(spec.seed, &window, cfg.tick_rate),
            curve,
            audit_failures,
        },
        episodes,
        traces: traces.into(),
        eval,
        agent,
    })
}

fn checkpoint(decisions: u64, ticks: u64, window: &ScoreWindow, episodes: u64, tick_rate: f64) -> CurvePoint {
    CurvePoint {
        decisions,
        ticks,
        hz: tick_rate * decisions as f64 / ticks as f64,
        hz_100: window.hz(tick_rate),
        task_return_100: window.mean_task_return(),
        net_return_100: window.mean_net_return(),
        episodes,
    }
}

fn episode_log(seed: u64, episode: u64, totals: &crate::exec::EpisodeTotals, trained: u64, tick_rate: f64) -> EpisodeLog {
    EpisodeLog {
        seed,
        episode,
        task_return: totals.task_return,
        total_cost: totals.total_cost,
        net_return: totals.net_return(),
        decisions: totals.decisions,
        ticks: totals.ticks,
        hz: tick_rate * totals.decisions as f64 / totals.ticks.max(1) as f64,
        terminal: totals.terminal,
        trained_decisions: trained,
    }
}

fn greedy_eval(
    agent: &Agent,
    env: &mut dyn Environment,
    executor: OptionExecutor,
    spec: &RunSpec,
    episodes: usize,
) -> Result<Vec<(EpisodeLog, ExecutionTrace)>> {
    let mut seeds = rng_stream(spec.seed, STREAM_EVAL);
    let mut out = Vec::with_capacity(episodes);
    for n in 0..episodes as u64 {
        let mut runner = EpisodeRunner::new(executor, spec.config.tick_cap);
        let mut state = runner.begin(env, seeds.gen());
        while !runner.finished(env) {
            let option: ControlOption = agent.act_greedy(&state);
            state = runner.step(env, option)?.next_state;
        }
        let totals = runner.totals();
        out.push((
            episode_log(spec.seed, n, &totals, 0, spec.config.tick_rate),
            runner.take_trace(),
        ));
    }
    Ok(out)
}

/// Mean task return of a uniformly random single-tick policy over `episodes` episodes.
pub fn random_policy_score(config: &ExperimentConfig, episodes: usize) -> Result<f64> {
    let mut env = config.env.build(config.sticky)?;
    let actions = env.descriptor().num_actions();
    let first = *config.seeds.first().ok_or_else(|| Error::config("seed list is empty"))?;
    let mut episode_seeds = rng_stream(first, 6);
    let mut policy_rng = rng_stream(first, 7);
    let executor = OptionExecutor::new(config.agent.gamma, ComputeCostModel::free());
    let one = crate::primitives::Duration::new(1)?;
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut runner = EpisodeRunner::new(executor, config.tick_cap).without_trace();
        runner.begin(&mut *env, episode_seeds.next_u64());
        while !runner.finished(&*env) {
            let option = ControlOption {
                action: policy_rng.gen_range(0..actions),
                duration: one,
            };
            runner.step(&mut *env, option)?;
        }
        total += runner.totals().task_return;
    }
    Ok(total / episodes.max(1) as f64)
}
