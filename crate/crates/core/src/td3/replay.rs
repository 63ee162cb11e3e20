use alloc::vec::Vec;

use rand::Rng;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// One environment step as stored for learning.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// 0 on true termination, 1 when the next state should be bootstrapped
    /// (ordinary continuation or time-limit truncation).
    pub mask: f64,
}

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    masks: Vec<f64>,
    len: usize,
    cursor: usize,
}

/// Column-stacked sample of transitions.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Tensor,
    pub actions: Tensor,
    pub rewards: Vec<f64>,
    pub next_states: Tensor,
    pub masks: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let states: Vec<&[f64]> = ts.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<&[f64]> = ts.iter().map(|t| t.action.as_slice()).collect();
        let next: Vec<&[f64]> = ts.iter().map(|t| t.next_state.as_slice()).collect();
        Ok(Self {
            states: Tensor::from_rows(&states)?,
            actions: Tensor::from_rows(&actions)?,
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: Tensor::from_rows(&next)?,
            masks: ts.iter().map(|t| t.mask).collect(),
        })
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        Self {
            capacity,
            state_dim,
            action_dim,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            masks: Vec::new(),
            len: 0,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) -> Result<()> {
        for (ctx, want, got) in [
            ("transition state", self.state_dim, t.state.len()),
            ("transition action", self.action_dim, t.action.len()),
            ("transition next state", self.state_dim, t.next_state.len()),
        ] {
            if want != got {
                return Err(Error::ShapeMismatch {
                    context: ctx,
                    expected: want,
                    found: got,
                });
            }
        }
        let (s, a) = (self.state_dim, self.action_dim);
        if self.len < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_states.extend_from_slice(&t.next_state);
            self.masks.push(t.mask);
            self.len += 1;
        } else {
            let i = self.cursor;
            self.states[i * s..(i + 1) * s].copy_from_slice(&t.state);
            self.actions[i * a..(i + 1) * a].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.next_states[i * s..(i + 1) * s].copy_from_slice(&t.next_state);
            self.masks[i] = t.mask;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Stored transition at ring slot `i`.
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let (s, a) = (self.state_dim, self.action_dim);
        Some(Transition {
            state: self.states[i * s..(i + 1) * s].to_vec(),
            action: self.actions[i * a..(i + 1) * a].to_vec(),
            reward: self.rewards[i],
            next_state: self.next_states[i * s..(i + 1) * s].to_vec(),
            mask: self.masks[i],
        })
    }

    /// Indices drawn uniformly, with replacement, from `[0, len)`.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.len == 0 || n == 0 || n > self.len {
            return Err(Error::InsufficientSamples {
                available: self.len,
                requested: n,
            });
        }
        Ok((0..n).map(|_| rng.gen_range(0..self.len)).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let (s, a) = (self.state_dim, self.action_dim);
        let gather = |src: &[f64], w: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(n * w);
            for &i in &idx {
                out.extend_from_slice(&src[i * w..(i + 1) * w]);
            }
            out
        };
        Ok(Batch {
            states: Tensor::matrix(n, s, gather(&self.states, s))?,
            actions: Tensor::matrix(n, a, gather(&self.actions, a))?,
            rewards: idx.iter().map(|&i| self.rewards[i]).collect(),
            next_states: Tensor::matrix(n, s, gather(&self.next_states, s))?,
            masks: idx.iter().map(|&i| self.masks[i]).collect(),
        })
    }
}
