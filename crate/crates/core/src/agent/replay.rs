use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Mini-batch laid out one transition per row.
#[derive(Debug, Clone)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
}

/// Fixed-capacity FIFO of transitions. Also tracks the mean stored state,
/// which serves as the masking baseline for Shapley rollouts.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    state_sum: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            state_sum: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.state_sum.is_empty() {
            self.state_sum = vec![0.0; t.state.len()];
        }
        for (acc, v) in self.state_sum.iter_mut().zip(&t.state) {
            *acc += v;
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            let old = std::mem::replace(&mut self.items[self.next], t);
            for (acc, v) in self.state_sum.iter_mut().zip(&old.state) {
                *acc -= v;
            }
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }

    /// Mean of the stored states, or `None` while empty.
    pub fn mean_state(&self) -> Option<Vec<f64>> {
        if self.items.is_empty() {
            return None;
        }
        let n = self.items.len() as f64;
        Some(self.state_sum.iter().map(|s| s / n).collect())
    }

    /// Draws `k` indices uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Batch> {
        if self.items.len() < k || k == 0 {
            return Err(Error::InsufficientBuffer {
                have: self.items.len(),
                need: k.max(1),
            });
        }
        let indices: Vec<usize> = (0..k).map(|_| rng.gen_range(0..self.items.len())).collect();
        let sd = self.items[0].state.len();
        let ad = self.items[0].action.len();
        let mut states = Array2::zeros((k, sd));
        let mut actions = Array2::zeros((k, ad));
        let mut next_states = Array2::zeros((k, sd));
        let mut rewards = Vec::with_capacity(k);
        for (row, &idx) in indices.iter().enumerate() {
            let t = &self.items[idx];
            states.row_mut(row).assign(&ndarray::aview1(&t.state));
            actions.row_mut(row).assign(&ndarray::aview1(&t.action));
            next_states.row_mut(row).assign(&ndarray::aview1(&t.next_state));
            rewards.push(t.reward);
        }
        Ok(Batch {
            indices,
            states,
            actions,
            rewards,
            next_states,
        })
    }
}
