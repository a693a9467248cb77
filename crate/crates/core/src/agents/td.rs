use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QFunction;
use crate::envs::EnvState;
use crate::exec::OptionTransition;
use crate::primitives::{bootstrap_discount, OptionSet};

/// Temporal-difference error for one stored option transition.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TdError(pub f64);

/// How greedy selection breaks exact ties between option values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// First maximal index: lowest action, then shortest duration.
    #[default]
    LowestIndex,
    /// Longest duration among the maximizers, then lowest action.
    LongestDuration,
}

/// `reward_sum + γ^τ_eff · max_o Q_target(s', o)`, with the bootstrap dropped on terminal
/// transitions. The stored `reward_sum` already has the decision cost taken out.
pub fn td_target<Q: QFunction + ?Sized>(transition: &OptionTransition, q_target: &Q, gamma: f64) -> f64 {
    let discount = bootstrap_discount(gamma, transition.tau_effective, transition.terminal);
    if transition.terminal {
        return transition.reward_sum;
    }
    transition.reward_sum + discount * q_target.max_value(&transition.next_state)
}

pub fn td_error<Q: QFunction + ?Sized, T: QFunction + ?Sized>(
    transition: &OptionTransition,
    options: &OptionSet,
    q_current: &Q,
    q_target: &T,
    gamma: f64,
) -> TdError {
    let index = options
        .index_of(transition.option)
        .expect("transition option belongs to the agent's option set");
    TdError(td_target(transition, q_target, gamma) - q_current.value(&transition.state, index))
}

/// Index of the greedy option for `values` under `tie_break`.
pub fn greedy_index(values: &[f64], options: &OptionSet, tie_break: TieBreak) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        let better = match tie_break {
            TieBreak::LowestIndex => v > values[best],
            TieBreak::LongestDuration => {
                v > values[best]
                    || (v == values[best] && options.get(i).duration > options.get(best).duration)
            }
        };
        if better {
            best = i;
        }
    }
    best
}

/// ε-greedy selection over the full option set.
///
/// Draws one uniform number to decide exploration and, when exploring, one uniform index.
pub fn select_option<Q: QFunction + ?Sized, R: Rng + ?Sized>(
    state: &EnvState,
    q: &Q,
    options: &OptionSet,
    epsilon: f64,
    rng: &mut R,
    tie_break: TieBreak,
) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..options.len())
    } else {
        greedy_index(&q.values(state), options, tie_break)
    }
}
