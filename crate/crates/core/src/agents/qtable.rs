use serde::{Deserialize, Serialize};

use super::QFunction;
use crate::envs::EnvState;

/// Dense `state id × option index` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    num_states: usize,
    num_options: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_options: usize, init: f64) -> Self {
        QTable {
            num_states,
            num_options,
            values: vec![init; num_states * num_options],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn row(&self, state_id: usize) -> &[f64] {
        let k = self.num_options;
        &self.values[state_id * k..(state_id + 1) * k]
    }

    pub fn row_mut(&mut self, state_id: usize) -> &mut [f64] {
        let k = self.num_options;
        &mut self.values[state_id * k..(state_id + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute entrywise difference; tables must share a shape.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "table shapes differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl QFunction for QTable {
    fn num_options(&self) -> usize {
        self.num_options
    }

    fn values(&self, state: &EnvState) -> Vec<f64> {
        self.row(state.id).to_vec()
    }

    fn value(&self, state: &EnvState, option_index: usize) -> f64 {
        self.values[state.id * self.num_options + option_index]
    }

    fn max_value(&self, state: &EnvState) -> f64 {
        self.row(state.id).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
