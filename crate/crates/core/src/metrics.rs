//! Decision accounting and the rate and score metrics derived from it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::DEFAULT_TICK_RATE;

/// Decisions made versus ticks elapsed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionLedger {
    decisions: u64,
    ticks: u64,
    tick_rate: f64,
}

impl Default for DecisionLedger {
    fn default() -> Self {
        DecisionLedger::new(DEFAULT_TICK_RATE)
    }
}

impl DecisionLedger {
    pub fn new(tick_rate: f64) -> Self {
        DecisionLedger {
            decisions: 0,
            ticks: 0,
            tick_rate,
        }
    }

    pub fn from_counts(decisions: u64, ticks: u64, tick_rate: f64) -> Result<Self> {
        if decisions > ticks {
            return Err(Error::usage(format!("{decisions} decisions over only {ticks} ticks")));
        }
        Ok(DecisionLedger {
            decisions,
            ticks,
            tick_rate,
        })
    }

    pub fn from_indicators(indicators: &[bool], tick_rate: f64) -> Self {
        let mut ledger = DecisionLedger::new(tick_rate);
        for &d in indicators {
            ledger.record_tick(d);
        }
        ledger
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn tick_rate(&self) -> f64 {
        self.tick_rate
    }

    pub fn record_tick(&mut self, decision: bool) {
        self.ticks += 1;
        self.decisions += u64::from(decision);
    }

    /// Adds a completed stretch of `ticks` ticks containing `decisions` decisions.
    pub fn record(&mut self, decisions: u64, ticks: u64) -> Result<()> {
        if decisions > ticks {
            return Err(Error::usage(format!("{decisions} decisions over only {ticks} ticks")));
        }
        self.decisions += decisions;
        self.ticks += ticks;
        Ok(())
    }

    pub fn merge(&mut self, other: &DecisionLedger) -> Result<()> {
        if self.tick_rate != other.tick_rate {
            return Err(Error::usage("cannot merge ledgers with different tick rates"));
        }
        self.decisions += other.decisions;
        self.ticks += other.ticks;
        Ok(())
    }

    pub fn decisions_per_second(&self) -> Result<f64> {
        decisions_per_second(self)
    }
}

/// `tick_rate · d_T / T`.
pub fn decisions_per_second(ledger: &DecisionLedger) -> Result<f64> {
    if ledger.ticks == 0 {
        return Err(Error::ZeroTicks);
    }
    Ok(ledger.tick_rate * ledger.decisions as f64 / ledger.ticks as f64)
}

/// Exponentially decayed decision rate, one value per tick, in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTrace {
    pub beta: f64,
    pub tick_rate: f64,
    pub values: Vec<f64>,
}

impl RateTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The smoothing constant used when none is configured.
pub const DEFAULT_EMA_BETA: f64 = 0.8;

/// `y_0 = x_0·Hz`, `y_t = β y_(t-1) + (1 − β) x_t·Hz`.
pub fn ema_rate_trace(indicators: &[bool], beta: f64, tick_rate: f64) -> Result<RateTrace> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::usage(format!("EMA decay {beta} must lie strictly between 0 and 1")));
    }
    let mut values = Vec::with_capacity(indicators.len());
    let mut y = 0.0;
    for (t, &d) in indicators.iter().enumerate() {
        let x = if d { tick_rate } else { 0.0 };
        y = if t == 0 { x } else { beta * y + (1.0 - beta) * x };
        values.push(y);
    }
    Ok(RateTrace {
        beta,
        tick_rate,
        values,
    })
}

/// Mean EMA rate over active ticks and over idle ticks of one trajectory. Idle ticks
/// before the first active tick are a lead-in, not a pause between bursts, and count
/// toward neither mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRates {
    pub active: Option<f64>,
    pub idle: Option<f64>,
    pub active_ticks: usize,
    pub idle_ticks: usize,
}

pub fn phase_rates(indicators: &[bool], idle: &[bool], beta: f64, tick_rate: f64) -> Result<PhaseRates> {
    if indicators.len() != idle.len() {
        return Err(Error::usage("decision and idle flags differ in length"));
    }
    let trace = ema_rate_trace(indicators, beta, tick_rate)?;
    let (mut a, mut na, mut i, mut ni) = (0.0, 0usize, 0.0, 0usize);
    let start = idle.iter().position(|&i| !i).unwrap_or(idle.len());
    for (&v, &is_idle) in trace.values.iter().zip(idle).skip(start) {
        if is_idle {
            i += v;
            ni += 1;
        } else {
            a += v;
            na += 1;
        }
    }
    Ok(PhaseRates {
        active: (na > 0).then(|| a / na as f64),
        idle: (ni > 0).then(|| i / ni as f64),
        active_ticks: na,
        idle_ticks: ni,
    })
}

pub const DEFAULT_HISTOGRAM_WINDOW: usize = 24;

/// Counts of per-window decision rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateHistogram {
    /// Ascending bin edges; bin `i` spans `[edges[i], edges[i+1])`, the last one closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub window_ticks: usize,
}

impl RateHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    /// Bins that hold more observations than both neighbours.
    pub fn modes(&self) -> Vec<usize> {
        let c = &self.counts;
        (0..c.len())
            .filter(|&i| {
                c[i] > 0 && (i == 0 || c[i] > c[i - 1]) && (i + 1 == c.len() || c[i] >= c[i + 1])
            })
            .collect()
    }
}

/// One bin per rate a window of `window_ticks` ticks can produce, centered on it.
pub fn default_rate_bins(window_ticks: usize, tick_rate: f64) -> Vec<f64> {
    let step = tick_rate / window_ticks as f64;
    (0..=window_ticks + 1).map(|i| (i as f64 - 0.5) * step).collect()
}

/// Splits every trajectory into consecutive windows of `window_ticks` ticks (dropping any
/// ragged tail), computes each window's rate and bins it. Rates outside the edges go to
/// the nearest end bin.
pub fn rate_histogram(
    trajectories: &[Vec<bool>],
    window_ticks: usize,
    edges: &[f64],
    tick_rate: f64,
) -> Result<RateHistogram> {
    if window_ticks == 0 {
        return Err(Error::usage("histogram window must be at least one tick"));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("histogram edges must be strictly increasing, at least two"));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    for traj in trajectories {
        for window in traj.chunks_exact(window_ticks) {
            let d = window.iter().filter(|&&x| x).count();
            let hz = tick_rate * d as f64 / window_ticks as f64;
            let bin = edges[1..bins].partition_point(|&e| e <= hz);
            counts[bin] += 1;
        }
    }
    Ok(RateHistogram {
        edges: edges.to_vec(),
        counts,
        window_ticks,
    })
}

/// `(agent − random) / (baseline − random)`.
pub fn normalized_score(agent: f64, random: f64, baseline: f64) -> Result<f64> {
    let denom = baseline - random;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateNormalization(random));
    }
    Ok((agent - random) / denom)
}

/// Totals of one finished episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub task_return: f64,
    pub net_return: f64,
    pub decisions: u64,
    pub ticks: u64,
}

pub const SCORE_WINDOW: usize = 100;

/// The most recent `capacity` episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreWindow {
    capacity: usize,
    episodes: VecDeque<EpisodeScore>,
}

impl Default for ScoreWindow {
    fn default() -> Self {
        ScoreWindow::new(SCORE_WINDOW)
    }
}

impl ScoreWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "score window must hold at least one episode");
        ScoreWindow {
            capacity,
            episodes: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, episode: EpisodeScore) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    fn mean(&self, f: impl Fn(&EpisodeScore) -> f64) -> Option<f64> {
        if self.episodes.is_empty() {
            return None;
        }
        Some(self.episodes.iter().map(f).sum::<f64>() / self.episodes.len() as f64)
    }

    pub fn mean_task_return(&self) -> Option<f64> {
        self.mean(|e| e.task_return)
    }

    pub fn mean_net_return(&self) -> Option<f64> {
        self.mean(|e| e.net_return)
    }

    /// All decisions over all ticks in the window.
    pub fn ledger(&self, tick_rate: f64) -> DecisionLedger {
        let mut l = DecisionLedger::new(tick_rate);
        for e in &self.episodes {
            l.decisions += e.decisions;
            l.ticks += e.ticks;
        }
        l
    }

    pub fn hz(&self, tick_rate: f64) -> Option<f64> {
        self.ledger(tick_rate).decisions_per_second().ok()
    }

    pub fn task_sum(&self) -> f64 {
        self.episodes.iter().map(|e| e.task_return).sum()
    }
}

/// Last-window results of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub episodes: usize,
    pub task_return_100: f64,
    pub net_return_100: f64,
    pub hz_100: f64,
}

impl SeedScore {
    pub fn from_window(seed: u64, window: &ScoreWindow, tick_rate: f64) -> Option<Self> {
        Some(SeedScore {
            seed,
            episodes: window.len(),
            task_return_100: window.mean_task_return()?,
            net_return_100: window.mean_net_return()?,
            hz_100: window.hz(tick_rate)?,
        })
    }
}

/// Per-seed results plus their unweighted means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub per_seed: Vec<SeedScore>,
    pub task_return_100: f64,
    pub net_return_100: f64,
    pub hz_100: f64,
}

impl ScoreSummary {
    pub fn pool(per_seed: Vec<SeedScore>) -> Result<Self> {
        if per_seed.is_empty() {
            return Err(Error::usage("no seeds to summarize"));
        }
        let n = per_seed.len() as f64;
        let mean = |f: fn(&SeedScore) -> f64| per_seed.iter().map(f).sum::<f64>() / n;
        Ok(ScoreSummary {
            task_return_100: mean(|s| s.task_return_100),
            net_return_100: mean(|s| s.net_return_100),
            hz_100: mean(|s| s.hz_100),
            per_seed,
        })
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Ties share the mean of the ranks they span.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Rank correlation, with tied values given their average rank. `None` when either side
/// has no variation.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
