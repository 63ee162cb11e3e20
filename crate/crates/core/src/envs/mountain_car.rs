//! Continuous mountain car: an underpowered car must rock out of a valley.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::constants::mountain_car::*;
use super::{check_action, Env, EnvSpec, StepResult};
use crate::rng::{stream, Stream};
use crate::Result;

#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    position: f64,
    velocity: f64,
    steps: usize,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 2,
                action_dim: 1,
                action_low: vec![MIN_ACTION],
                action_high: vec![MAX_ACTION],
                base_dt: DT,
                max_episode_steps: MAX_STEPS,
            },
            position: 0.0,
            velocity: 0.0,
            steps: 0,
        }
    }

    pub fn set_state(&mut self, position: f64, velocity: f64) {
        self.position = position;
        self.velocity = velocity;
    }
}

impl Env for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, Stream::Env);
        self.position = rng.gen_range(INIT_LOW..=INIT_HIGH);
        self.velocity = 0.0;
        self.steps = 0;
        vec![self.position, self.velocity]
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let force = check_action(&self.spec, action)?[0];
        self.velocity += force * POWER - HILL * libm::cos(3.0 * self.position);
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position = (self.position + self.velocity).clamp(MIN_POSITION, MAX_POSITION);
        if self.position == MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
        self.steps += 1;
        let terminated = self.position >= GOAL_POSITION && self.velocity >= GOAL_VELOCITY;
        let mut reward = -ACTION_COST * force * force;
        if terminated {
            reward += GOAL_REWARD;
        }
        Ok(StepResult {
            next_state: vec![self.position, self.velocity],
            reward,
            terminated,
            truncated: !terminated && self.steps >= MAX_STEPS,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_band() {
        let mut env = MountainCar::new();
        for seed in 0..200 {
            let s = env.reset(seed);
            assert!((INIT_LOW..=INIT_HIGH).contains(&s[0]));
            assert_eq!(s[1], 0.0);
        }
    }

    #[test]
    fn goal_gives_bonus_and_terminates() {
        let mut env = MountainCar::new();
        env.reset(0);
        env.set_state(0.44, 0.05);
        let r = env.step(&[1.0]).unwrap();
        assert!(r.terminated && !r.truncated);
        assert!(r.next_state[0] >= GOAL_POSITION);
        assert_eq!(r.reward, GOAL_REWARD - ACTION_COST);
    }

    #[test]
    fn per_step_reward_is_action_cost() {
        let mut env = MountainCar::new();
        env.reset(1);
        for t in 1..=MAX_STEPS {
            let r = env.step(&[0.5]).unwrap();
            assert!(!r.terminated);
            assert!(r.reward < 0.0);
            assert_eq!(r.reward, -ACTION_COST * 0.25);
            assert_eq!(r.truncated, t == MAX_STEPS);
        }
    }

    #[test]
    fn left_wall_is_inelastic() {
        let mut env = MountainCar::new();
        env.reset(0);
        env.set_state(-1.19, -0.07);
        let r = env.step(&[-1.0]).unwrap();
        assert_eq!(r.next_state, vec![MIN_POSITION, 0.0]);
    }
}
