//! Torque-limited pendulum swing-up. `θ = 0` is upright.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::constants::pendulum::*;
use super::{check_action, Env, EnvSpec, StepResult};
use crate::rng::{stream, Stream};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Pendulum {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                base_dt: DT,
                max_episode_steps: MAX_STEPS,
            },
            theta: 0.0,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    /// Places the pendulum at `(θ, θ̇)` without resetting the step counter.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = theta;
        self.theta_dot = theta_dot;
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    pub fn angular_velocity(&self) -> f64 {
        self.theta_dot
    }

    pub fn observation(&self) -> Vec<f64> {
        vec![libm::cos(self.theta), libm::sin(self.theta), self.theta_dot]
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(x: f64) -> f64 {
    let r = libm::fmod(x + PI, 2.0 * PI);
    let r = if r < 0.0 { r + 2.0 * PI } else { r };
    r - PI
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, Stream::Env);
        self.theta = rng.gen_range(-INIT_ANGLE..=INIT_ANGLE);
        self.theta_dot = rng.gen_range(-INIT_SPEED..=INIT_SPEED);
        self.steps = 0;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = check_action(&self.spec, action)?[0];
        let th = self.theta;
        let cost = libm::pow(normalize_angle(th), 2.0)
            + SPEED_COST * self.theta_dot * self.theta_dot
            + TORQUE_COST * u * u;
        let acc = 3.0 * GRAVITY / (2.0 * LENGTH) * libm::sin(th) + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta_dot = (self.theta_dot + acc * DT).clamp(-MAX_SPEED, MAX_SPEED);
        self.theta = th + self.theta_dot * DT;
        self.steps += 1;
        Ok(StepResult {
            next_state: self.observation(),
            reward: -cost,
            terminated: false,
            truncated: self.steps >= MAX_STEPS,
        })
    }
}
