//! Continuous-control tasks behind one stepping interface.

pub mod cartpole;
pub mod constants;
pub mod mountain_car;
mod multirate;
pub mod pendulum;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use cartpole::CartPole;
pub use mountain_car::MountainCar;
pub use multirate::MultiRateStepper;
pub use pendulum::Pendulum;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    /// Seconds per step.
    pub base_dt: f64,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    /// Half the width of the action box, per dimension.
    pub fn max_action(&self) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    pub fn clip(&self, action: &mut [f64]) {
        for ((a, &l), &h) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(l, h);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// Failure or goal: the episode ended inside the task.
    pub terminated: bool,
    /// Time limit reached without termination.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Env {
    fn spec(&self) -> &EnvSpec;

    /// Starts an episode; the same seed always yields the same state.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step of `spec().base_dt` seconds.
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
}

impl<E: Env + ?Sized> Env for Box<E> {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        (**self).step(action)
    }
}

impl<E: Env + ?Sized> Env for &mut E {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        (**self).step(action)
    }
}

pub(crate) fn check_action(spec: &EnvSpec, action: &[f64]) -> Result<Vec<f64>> {
    if action.len() != spec.action_dim {
        return Err(Error::ShapeMismatch {
            context: "action width",
            expected: spec.action_dim,
            found: action.len(),
        });
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFiniteAction);
    }
    let mut a = action.to_vec();
    spec.clip(&mut a);
    Ok(a)
}

/// Task selector used by configuration files and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    Pendulum,
    MountainCar,
    CartPole,
}

impl EnvId {
    pub const ALL: [EnvId; 3] = [EnvId::Pendulum, EnvId::MountainCar, EnvId::CartPole];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::Pendulum => "pendulum",
            EnvId::MountainCar => "mountaincar",
            EnvId::CartPole => "cartpole",
        }
    }

    pub fn make(self) -> Box<dyn Env + Send> {
        match self {
            EnvId::Pendulum => Box::new(Pendulum::new()),
            EnvId::MountainCar => Box::new(MountainCar::new()),
            EnvId::CartPole => Box::new(CartPole::new()),
        }
    }

    pub fn return_bounds(self) -> (f64, f64) {
        use constants::return_bounds::*;
        match self {
            EnvId::Pendulum => PENDULUM,
            EnvId::MountainCar => MOUNTAIN_CAR,
            EnvId::CartPole => CARTPOLE,
        }
    }

    pub fn reward_scale(self) -> f64 {
        use constants::reward_scale::*;
        match self {
            EnvId::Pendulum => PENDULUM,
            EnvId::MountainCar => MOUNTAIN_CAR,
            EnvId::CartPole => CARTPOLE,
        }
    }

    /// Default fast-action penalty coefficient.
    pub fn default_fast_penalty(self) -> f64 {
        0.1 * libm::fabs(self.reward_scale())
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown environment `{s}`")))
    }
}
