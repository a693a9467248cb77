//! Shared domain types and the pure numeric pieces every other module leans on:
//! discounting, the per-decision cost schedule and the option set `actions × durations`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default discount when a config does not name one.
pub const DEFAULT_GAMMA: f64 = 0.99;

/// Ticks per simulated second. One tick is one decision opportunity (five emulator frames
/// at 60 fps), so acting on every tick is a 12 Hz decision rate.
pub const DEFAULT_TICK_RATE: f64 = 12.0;

/// Index of a decision opportunity within an episode. Starts at 0 on reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Tick(pub u64);

impl Tick {
    pub fn next(self) -> Tick {
        Tick(self.0 + 1)
    }
}

/// Number of ticks an option repeats its base action. Always at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Duration(u32);

impl Duration {
    pub fn new(tau: u32) -> Result<Self> {
        if tau == 0 {
            return Err(Error::config("option duration must be at least 1 tick"));
        }
        Ok(Duration(tau))
    }

    pub fn ticks(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Duration {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        Duration::new(value)
    }
}

impl From<Duration> for u32 {
    fn from(d: Duration) -> u32 {
        d.0
    }
}

/// The configured duration set, kept sorted ascending and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct DurationSet(Vec<Duration>);

impl DurationSet {
    pub fn new(taus: &[u32]) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::config("duration set must not be empty"));
        }
        let mut durations = taus
            .iter()
            .map(|&t| Duration::new(t))
            .collect::<Result<Vec<_>>>()?;
        durations.sort_unstable();
        durations.dedup();
        Ok(DurationSet(durations))
    }

    /// `{1}`: the fixed-rate regime.
    pub fn single_step() -> Self {
        DurationSet(vec![Duration(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Duration] {
        &self.0
    }

    pub fn max(&self) -> Duration {
        *self.0.last().expect("duration set is never empty")
    }
}

impl Default for DurationSet {
    fn default() -> Self {
        DurationSet(vec![Duration(1), Duration(2), Duration(4), Duration(8)])
    }
}

impl TryFrom<Vec<u32>> for DurationSet {
    type Error = Error;

    fn try_from(value: Vec<u32>) -> Result<Self> {
        DurationSet::new(&value)
    }
}

impl From<DurationSet> for Vec<u32> {
    fn from(set: DurationSet) -> Vec<u32> {
        set.0.into_iter().map(u32::from).collect()
    }
}

/// A base action held for a fixed number of ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlOption {
    pub action: usize,
    pub duration: Duration,
}

impl fmt::Display for ControlOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(a{}, τ={})", self.action, self.duration.ticks())
    }
}

/// The Cartesian product of base actions and durations.
///
/// Options are indexed actions-major with durations ascending, so index
/// `a * |durations| + k` is action `a` held for the `k`-th shortest duration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSet {
    num_actions: usize,
    durations: DurationSet,
}

impl OptionSet {
    pub fn new(num_actions: usize, durations: DurationSet) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::config("option set needs at least one base action"));
        }
        Ok(OptionSet {
            num_actions,
            durations,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn durations(&self) -> &DurationSet {
        &self.durations
    }

    pub fn len(&self) -> usize {
        self.num_actions * self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, index: usize) -> ControlOption {
        assert!(index < self.len(), "option index {index} out of range");
        let k = self.durations.len();
        ControlOption {
            action: index / k,
            duration: self.durations.as_slice()[index % k],
        }
    }

    pub fn index_of(&self, option: ControlOption) -> Option<usize> {
        if option.action >= self.num_actions {
            return None;
        }
        let k = self.durations.as_slice().iter().position(|&d| d == option.duration)?;
        Some(option.action * self.durations.len() + k)
    }

    pub fn iter(&self) -> impl Iterator<Item = ControlOption> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }
}

/// Per-decision compute cost, in reward units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ComputeCostModel {
    c: f64,
}

impl ComputeCostModel {
    pub fn new(c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::config(format!("compute cost must be finite and >= 0, got {c}")));
        }
        Ok(ComputeCostModel { c })
    }

    pub fn free() -> Self {
        ComputeCostModel { c: 0.0 }
    }

    pub fn cost(&self) -> f64 {
        self.c
    }
}

impl TryFrom<f64> for ComputeCostModel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        ComputeCostModel::new(value)
    }
}

impl From<ComputeCostModel> for f64 {
    fn from(m: ComputeCostModel) -> f64 {
        m.c
    }
}

/// Cost emitted on one tick: the full `c` when an option was selected there, nothing while
/// an option is running.
pub fn cost_at_tick(is_decision_tick: bool, model: &ComputeCostModel) -> f64 {
    if is_decision_tick {
        model.c
    } else {
        0.0
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::usage(format!("discount must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

/// `Σ_i gamma^(i-1) · rewards[i]`, accumulated front to back.
///
/// The weight is carried multiplicatively, so `gamma = 1` is the plain left-to-right sum
/// and `gamma = 0` returns the first reward unchanged.
pub fn discounted_sum(rewards: &[f64], gamma: f64) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::usage("discounted sum of an empty reward sequence"));
    }
    check_gamma(gamma)?;
    let mut weight = 1.0;
    let mut total = 0.0;
    for &r in rewards {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}

/// A discounted reward sum together with the discount that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountedReturn {
    pub value: f64,
    pub gamma: f64,
}

impl DiscountedReturn {
    pub fn from_rewards(rewards: &[f64], gamma: f64) -> Result<Self> {
        Ok(DiscountedReturn {
            value: discounted_sum(rewards, gamma)?,
            gamma,
        })
    }

    /// Closed interval the value must fall in when `n` rewards all lie in `[r_min, r_max]`.
    pub fn bounds(n: usize, gamma: f64, r_min: f64, r_max: f64) -> (f64, f64) {
        let mass = if gamma == 1.0 {
            n as f64
        } else {
            (1.0 - gamma.powi(n as i32)) / (1.0 - gamma)
        };
        (r_min * mass, r_max * mass)
    }
}

/// Multiplier on the bootstrapped next-state value: `gamma^tau_effective`, or zero past a
/// terminal transition.
pub fn bootstrap_discount(gamma: f64, tau_effective: u32, terminal: bool) -> f64 {
    debug_assert!(tau_effective >= 1);
    if terminal {
        0.0
    } else {
        gamma.powi(tau_effective as i32)
    }
}
