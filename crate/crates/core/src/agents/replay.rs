use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::OptionTransition;

/// Fixed-capacity ring buffer with seeded uniform sampling (with replacement).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<OptionTransition>,
    next: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, overwriting the oldest entry once full.
    pub fn push(&mut self, transition: OptionTransition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform indices, `min(batch_size, len)` of them.
    pub fn sample_indices(&mut self, batch_size: usize) -> Vec<usize> {
        let n = batch_size.min(self.items.len());
        (0..n).map(|_| self.rng.gen_range(0..self.items.len())).collect()
    }

    pub fn get(&self, index: usize) -> &OptionTransition {
        &self.items[index]
    }

    pub fn sample(&mut self, batch_size: usize) -> Vec<OptionTransition> {
        self.sample_indices(batch_size)
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect()
    }
}
