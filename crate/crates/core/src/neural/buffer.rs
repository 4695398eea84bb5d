//! Fixed-capacity experience replay with FIFO eviction.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{AdvisorSolution, StateId};

/// One joint step as every agent saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Per-agent observation before the step.
    pub obs: Vec<StateId>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Per-agent observation after the step.
    pub next_obs: Vec<StateId>,
    /// Next joint action: the one actually taken for decision making, the
    /// advisor's recommendation for advisor evaluation.
    pub next_actions: Vec<usize>,
    /// Per-agent advisor solution at the next state (advisor evaluation only).
    pub next_solutions: Option<Vec<AdvisorSolution>>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay buffer capacity must be positive".into()));
        }
        Ok(ReplayBuffer {
            capacity,
            items: Vec::new(),
            head: 0,
        })
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// `k` indices drawn uniformly with replacement. Empty when the buffer
    /// holds fewer than `k` items.
    pub fn sample_indices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        if self.items.len() < k {
            return Vec::new();
        }
        (0..k).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<&Transition> {
        self.sample_indices(k, rng).into_iter().map(|i| &self.items[i]).collect()
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }
}
