use alloc::vec::Vec;

use super::{Env, EnvSpec, StepResult};
use crate::{Error, Result};

/// Holds each action for `repeat` base steps and sums the rewards.
///
/// The wrapped task appears as an environment with period `repeat · base_dt`.
/// A held action stops early when the base episode ends.
#[derive(Debug, Clone)]
pub struct MultiRateStepper<E> {
    env: E,
    repeat: usize,
    spec: EnvSpec,
    last_base_steps: usize,
}

impl<E: Env> MultiRateStepper<E> {
    pub fn new(env: E, repeat: usize) -> Result<Self> {
        if repeat == 0 {
            return Err(Error::InvalidConfig("repeat must be at least 1".into()));
        }
        let mut spec = env.spec().clone();
        spec.base_dt *= repeat as f64;
        spec.max_episode_steps = spec.max_episode_steps.div_ceil(repeat);
        Ok(Self {
            env,
            repeat,
            spec,
            last_base_steps: 0,
        })
    }

    pub fn repeat(&self) -> usize {
        self.repeat
    }

    /// Base steps executed by the most recent call to `step`.
    pub fn last_base_steps(&self) -> usize {
        self.last_base_steps
    }

    pub fn inner(&self) -> &E {
        &self.env
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.env
    }

    pub fn into_inner(self) -> E {
        self.env
    }
}

impl<E: Env> Env for MultiRateStepper<E> {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.last_base_steps = 0;
        self.env.reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let mut reward = 0.0;
        self.last_base_steps = 0;
        loop {
            let mut r = self.env.step(action)?;
            reward += r.reward;
            self.last_base_steps += 1;
            if r.done() || self.last_base_steps == self.repeat {
                r.reward = reward;
                return Ok(r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{CartPole, Pendulum};

    #[test]
    fn repeat_one_is_plain_step() {
        let mut a = Pendulum::new();
        let mut b = MultiRateStepper::new(Pendulum::new(), 1).unwrap();
        assert_eq!(a.reset(9), b.reset(9));
        for k in 0..50 {
            let u = [((k as f64) * 0.37).sin() * 2.0];
            assert_eq!(a.step(&u).unwrap(), b.step(&u).unwrap());
        }
    }

    #[test]
    fn held_action_matches_explicit_steps() {
        let mut a = Pendulum::new();
        let mut b = MultiRateStepper::new(Pendulum::new(), 4).unwrap();
        a.reset(2);
        b.reset(2);
        let u = [0.7];
        let mut sum = 0.0;
        let mut last = None;
        for _ in 0..4 {
            let r = a.step(&u).unwrap();
            sum += r.reward;
            last = Some(r);
        }
        let r = b.step(&u).unwrap();
        assert_eq!(r.reward, sum);
        assert_eq!(r.next_state, last.unwrap().next_state);
        assert_eq!(b.last_base_steps(), 4);
    }

    #[test]
    fn stops_early_on_termination() {
        let mut env = MultiRateStepper::new(CartPole::new(), 4).unwrap();
        env.reset(0);
        // Pole fails on the second base step.
        env.inner_mut().set_state([0.0, 0.0, 0.17, 1.2]);
        let r = env.step(&[0.0]).unwrap();
        assert!(r.terminated);
        assert_eq!(env.last_base_steps(), 2);
        assert_eq!(r.reward, 1.0);
    }

    #[test]
    fn spec_is_rescaled() {
        let env = MultiRateStepper::new(Pendulum::new(), 4).unwrap();
        assert_eq!(env.spec().max_episode_steps, 50);
        assert!((env.spec().base_dt - 0.2).abs() < 1e-15);
        assert!(MultiRateStepper::new(Pendulum::new(), 0).is_err());
    }
}
