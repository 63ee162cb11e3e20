//! Cart-pole balancing with a continuous, bounded force. Only the pole
//! angle ends an episode; the cart runs on a track with inelastic end stops.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::constants::cartpole::*;
use super::{check_action, Env, EnvSpec, StepResult};
use crate::rng::{stream, Stream};
use crate::Result;

/// State `(x, ẋ, θ, θ̇)` with `θ = 0` upright.
#[derive(Debug, Clone)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    steps: usize,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 4,
                action_dim: 1,
                action_low: vec![-MAX_FORCE],
                action_high: vec![MAX_FORCE],
                base_dt: DT,
                max_episode_steps: MAX_STEPS,
            },
            state: [0.0; 4],
            steps: 0,
        }
    }

    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
    }

    fn failed(&self) -> bool {
        libm::fabs(self.state[2]) > ANGLE_LIMIT
    }
}

impl Env for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, Stream::Env);
        for v in &mut self.state {
            *v = rng.gen_range(-INIT_BAND..=INIT_BAND);
        }
        self.steps = 0;
        self.state.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let force = check_action(&self.spec, action)?[0];
        let [mut x, mut x_dot, mut th, mut th_dot] = self.state;
        let total = CART_MASS + POLE_MASS;
        let pml = POLE_MASS * HALF_LENGTH;
        let (sin, cos) = (libm::sin(th), libm::cos(th));
        let temp = (force + pml * th_dot * th_dot * sin) / total;
        let th_acc =
            (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / total));
        let x_acc = temp - pml * th_acc * cos / total;
        // Semi-implicit Euler: velocities first, positions from the new velocities.
        x_dot += DT * x_acc;
        x += DT * x_dot;
        th_dot += DT * th_acc;
        th += DT * th_dot;
        if libm::fabs(x) > TRACK_LIMIT {
            x = x.clamp(-TRACK_LIMIT, TRACK_LIMIT);
            x_dot = 0.0;
        }
        self.state = [x, x_dot, th, th_dot];
        self.steps += 1;
        let terminated = self.failed();
        Ok(StepResult {
            next_state: self.state.to_vec(),
            reward: if terminated { 0.0 } else { 1.0 },
            terminated,
            truncated: !terminated && self.steps >= MAX_STEPS,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_within_band() {
        let mut env = CartPole::new();
        for seed in 0..100 {
            assert!(env.reset(seed).iter().all(|v| v.abs() <= INIT_BAND));
        }
    }

    #[test]
    fn survival_step_pays_one() {
        let mut env = CartPole::new();
        env.reset(4);
        let r = env.step(&[0.0]).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(!r.terminated && !r.truncated);
    }

    #[test]
    fn falling_pole_terminates_with_zero_reward() {
        let mut env = CartPole::new();
        env.reset(0);
        env.set_state([0.0, 0.0, 0.19, 2.0]);
        let r = env.step(&[0.0]).unwrap();
        assert!(r.terminated);
        assert!(!r.truncated);
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn end_stop_halts_the_cart_without_ending_the_episode() {
        let mut env = CartPole::new();
        env.reset(0);
        env.set_state([TRACK_LIMIT - 0.001, 2.0, 0.0, 0.0]);
        let r = env.step(&[MAX_FORCE]).unwrap();
        assert_eq!(r.next_state[0], TRACK_LIMIT);
        assert_eq!(r.next_state[1], 0.0);
        assert!(!r.terminated);
        assert_eq!(r.reward, 1.0);
    }

    #[test]
    fn pushing_accelerates_cart_and_tips_pole_back() {
        let mut env = CartPole::new();
        env.reset(0);
        env.set_state([0.0; 4]);
        let r = env.step(&[3.0]).unwrap();
        assert!(r.next_state[1] > 0.0);
        assert!(r.next_state[3] < 0.0);
    }
}
