//! Exact option values for enumerable environments.

use super::QTable;
use crate::envs::{Environment, TabularModel};
use crate::error::{Error, Result};
use crate::primitives::{ComputeCostModel, OptionSet};

/// Where an option can end up after running from a given state.
#[derive(Debug, Clone, Copy)]
struct OptionOutcome {
    probability: f64,
    /// `Σ γ^(i-1) r_i` over the ticks actually run.
    discounted_reward: f64,
    /// `γ^τ_eff`, or zero if the run ended in a terminal state.
    bootstrap: f64,
    next_state: usize,
}

fn expand(
    model: &dyn TabularModel,
    state: usize,
    action: usize,
    ticks_left: u32,
    gamma: f64,
    probability: f64,
    reward_so_far: f64,
    weight: f64,
    out: &mut Vec<OptionOutcome>,
) {
    for o in model.outcomes(state, action) {
        let p = probability * o.probability;
        if p == 0.0 {
            continue;
        }
        let r = reward_so_far + weight * o.reward;
        let w = weight * gamma;
        if o.terminal {
            out.push(OptionOutcome {
                probability: p,
                discounted_reward: r,
                bootstrap: 0.0,
                next_state: o.next_state,
            });
        } else if ticks_left == 1 {
            out.push(OptionOutcome {
                probability: p,
                discounted_reward: r,
                bootstrap: w,
                next_state: o.next_state,
            });
        } else {
            expand(model, o.next_state, action, ticks_left - 1, gamma, p, r, w, out);
        }
    }
}

/// Semi-MDP value iteration over the option set.
///
/// Backs up `Q(s, o) ← E[r_(1:τ_eff) − c + γ^τ_eff max_o' Q(s', o')]` until the largest
/// change in a sweep falls below `tolerance`. Rows of terminal states stay zero.
pub fn smdp_value_iteration<E: Environment + ?Sized>(
    env: &E,
    options: &OptionSet,
    gamma: f64,
    cost: ComputeCostModel,
    tolerance: f64,
) -> Result<QTable> {
    let model = env
        .tabular_model()
        .ok_or_else(|| Error::NotEnumerable(env.descriptor().name))?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::usage("value iteration needs a discount in [0, 1)"));
    }
    if options.num_actions() != model.num_actions() {
        return Err(Error::usage("option set and environment disagree on the action count"));
    }
    if tolerance <= 0.0 {
        return Err(Error::usage("tolerance must be positive"));
    }

    let n_states = model.num_states();
    let n_options = options.len();
    let mut outcomes: Vec<Vec<OptionOutcome>> = Vec::with_capacity(n_states * n_options);
    for s in 0..n_states {
        for o in options.iter() {
            let mut out = Vec::new();
            if !model.is_terminal_state(s) {
                expand(model, s, o.action, o.duration.ticks(), gamma, 1.0, 0.0, 1.0, &mut out);
            }
            outcomes.push(out);
        }
    }

    let c = cost.cost();
    let mut q = QTable::new(n_states, n_options, 0.0);
    let max_sweeps = 1_000_000;
    for _ in 0..max_sweeps {
        let v: Vec<f64> = (0..n_states)
            .map(|s| {
                if model.is_terminal_state(s) {
                    0.0
                } else {
                    q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect();
        let mut change = 0.0f64;
        for s in 0..n_states {
            if model.is_terminal_state(s) {
                continue;
            }
            for k in 0..n_options {
                let backup: f64 = outcomes[s * n_options + k]
                    .iter()
                    .map(|o| o.probability * (o.discounted_reward - c + o.bootstrap * v[o.next_state]))
                    .sum();
                let slot = &mut q.row_mut(s)[k];
                change = change.max((backup - *slot).abs());
                *slot = backup;
            }
        }
        if change < tolerance {
            return Ok(q);
        }
    }
    Err(Error::usage("value iteration did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChainConfig, ChainMdp, LineTrack, LineTrackConfig};
    use crate::primitives::{ControlOption, Duration, DurationSet};

    fn chain() -> ChainMdp {
        ChainMdp::new(ChainConfig::default()).unwrap()
    }

    fn idx(options: &OptionSet, action: usize, tau: u32) -> usize {
        options
            .index_of(ControlOption {
                action,
                duration: Duration::new(tau).unwrap(),
            })
            .unwrap()
    }

    #[test]
    fn chain_values_by_hand() {
        // Goal at 5. From state k the best plan earns gamma^(4-k).
        let options = OptionSet::new(2, DurationSet::default()).unwrap();
        let q = smdp_value_iteration(&chain(), &options, 0.9, ComputeCostModel::free(), 1e-13).unwrap();
        let g: f64 = 0.9;
        assert!((q.row(0)[idx(&options, 1, 4)] - g.powi(4)).abs() < 1e-12);
        assert!((q.row(0)[idx(&options, 1, 8)] - g.powi(4)).abs() < 1e-12);
        assert!((q.row(0)[idx(&options, 1, 1)] - g.powi(4)).abs() < 1e-12);
        assert!((q.row(3)[idx(&options, 1, 2)] - g).abs() < 1e-12);
        assert!((q.row(4)[idx(&options, 1, 1)] - 1.0).abs() < 1e-12);
        // (left, 2) from 1: back to 0 after two ticks, then the best from 0.
        assert!((q.row(1)[idx(&options, 0, 2)] - g.powi(2) * g.powi(4)).abs() < 1e-12);
        assert!(q.row(5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn expensive_decisions_favor_longest_option() {
        let options = OptionSet::new(2, DurationSet::default()).unwrap();
        let q = smdp_value_iteration(&chain(), &options, 0.9, ComputeCostModel::new(2.0).unwrap(), 1e-12)
            .unwrap();
        for s in 0..5 {
            let row = q.row(s);
            let best = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(options.get(best).duration.ticks(), 8, "state {s}");
        }
    }

    #[test]
    fn zero_cost_optimal_net_equals_task_value() {
        let options = OptionSet::new(2, DurationSet::default()).unwrap();
        let net = smdp_value_iteration(&chain(), &options, 0.9, ComputeCostModel::free(), 1e-13).unwrap();
        let one_step = OptionSet::new(2, DurationSet::single_step()).unwrap();
        let task = smdp_value_iteration(&chain(), &one_step, 0.9, ComputeCostModel::free(), 1e-13).unwrap();
        for s in 0..6 {
            let v_net = net.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let v_task = task.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!((v_net - v_task).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_enumerable_env() {
        let env = LineTrack::new(LineTrackConfig::default()).unwrap();
        let options = OptionSet::new(3, DurationSet::default()).unwrap();
        assert!(matches!(
            smdp_value_iteration(&env, &options, 0.9, ComputeCostModel::free(), 1e-9),
            Err(Error::NotEnumerable(_))
        ));
    }
}
