//! Twin-delayed deep deterministic policy gradient (TD3).
//!
//! The base learner for every controller in this crate: the plain baseline,
//! the slow controller pre-trained at a longer period, the residual fast
//! controller and the gated slow controller.

mod agent;
mod replay;
mod train;

pub use agent::{concat_cols, policy_gradient_step, ActMode, Td3Agent};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{
    eval_seeds, evaluate, rollout, train, CurvePoint, EpisodeRecord, EvalStats, LearningCurve,
    StepRecord,
    TrainOptions,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::adam::AdamConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Config {
    /// Hidden layer widths shared by actor and critics.
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
    /// Discount γ.
    pub gamma: f64,
    /// Polyak rate for the target networks.
    pub tau: f64,
    /// Std of the target-policy smoothing noise, in units of max action.
    pub policy_noise: f64,
    /// Clip for the smoothing noise, in units of max action.
    pub noise_clip: f64,
    /// Critic updates per actor update.
    pub policy_delay: u64,
    /// Std of the exploration noise, in units of max action.
    pub exploration_noise: f64,
    /// Transitions collected with a uniform random policy before learning.
    pub warmup_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            hidden: vec![400, 300],
            adam: AdamConfig::default(),
            gamma: 0.99,
            tau: 0.005,
            policy_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            exploration_noise: 0.1,
            warmup_steps: 1000,
            batch_size: 256,
            buffer_capacity: 1_000_000,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("td3: {m}")));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden widths must be non-empty and positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.noise_clip > 0.0) {
            return bad("noise_clip must be positive");
        }
        if self.policy_noise < 0.0 || self.exploration_noise < 0.0 {
            return bad("noise scales must be non-negative");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be at least 1");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if !(self.adam.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}
