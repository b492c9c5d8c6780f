use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dialogue::{DialogueAct, StateVector, NUM_ACTS};

/// One transition `(s, a, r, s')`. `legal_next` is a bit set over act
/// indices, empty for terminal transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub state: StateVector,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateVector,
    pub terminal: bool,
    pub legal_next: u32,
}

impl Experience {
    pub fn mask(acts: &[DialogueAct]) -> u32 {
        acts.iter().fold(0, |m, a| m | (1 << a.index()))
    }

    pub fn legal_next_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_ACTS).filter(move |i| self.legal_next & (1 << i) != 0)
    }
}

/// Bounded FIFO with uniform sampling (with replacement).
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    items: Vec<Experience>,
    capacity: usize,
    next: usize,
    pushed: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
            pushed: 0,
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

    /// Total experiences ever pushed.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.next] = e;
        }
        self.next = (self.next + 1) % self.capacity;
        self.pushed += 1;
    }

    pub fn get(&self, i: usize) -> Option<&Experience> {
        self.items.get(i)
    }

    /// Entries from oldest to newest.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.next
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        self.sample_indices(n, rng)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}
