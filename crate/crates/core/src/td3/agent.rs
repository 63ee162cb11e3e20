use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::replay::{Batch, ReplayBuffer, Transition};
use super::Td3Config;
use crate::adam::AdamState;
use crate::nn::{Activation, Mlp};
use crate::rng::{stream, RunRng, Stream};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    /// Deterministic policy output.
    Greedy,
    /// Uniform random during warm-up, then policy plus Gaussian noise.
    Explore,
}

/// Actor, twin critics, their targets and optimiser states, and the replay
/// memory of one learner.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    config: Td3Config,
    state_dim: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    /// Half-width of the action box; unit for all noise scales.
    max_action: Vec<f64>,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    pub actor_opt: AdamState,
    pub critic1_opt: AdamState,
    pub critic2_opt: AdamState,
    buffer: ReplayBuffer,
    control_period: Option<f64>,
    env_steps: u64,
    critic_updates: u64,
    actor_updates: u64,
    noise_rng: RunRng,
    target_rng: RunRng,
    sample_rng: RunRng,
}

impl Td3Agent {
    /// Agent for a symmetric action box `[-high, high]` with a tanh actor.
    pub fn new(
        state_dim: usize,
        action_low: &[f64],
        action_high: &[f64],
        config: Td3Config,
        seed: u64,
    ) -> Result<Self> {
        let head = vec![Activation::Tanh; action_high.len()];
        Self::with_head(state_dim, action_low, action_high, head, config, seed)
    }

    /// Agent with an explicit actor head per action dimension.
    ///
    /// Tanh dimensions need a symmetric box `[-h, h]` and are scaled by `h`;
    /// logistic dimensions need `[0, h]` and are scaled by `h`.
    pub fn with_head(
        state_dim: usize,
        action_low: &[f64],
        action_high: &[f64],
        head: Vec<Activation>,
        config: Td3Config,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let action_dim = action_high.len();
        if action_low.len() != action_dim || head.len() != action_dim || action_dim == 0 {
            return Err(Error::ShapeMismatch {
                context: "action bounds",
                expected: action_dim,
                found: action_low.len().min(head.len()),
            });
        }
        for ((&l, &h), act) in action_low.iter().zip(action_high).zip(&head) {
            let ok = l < h
                && match act {
                    Activation::Tanh => l == -h,
                    Activation::Sigmoid => l == 0.0,
                    _ => false,
                };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "action box [{l}, {h}] does not fit a {act:?} head"
                )));
            }
        }
        let mut init = stream(seed, Stream::Init);
        let mut dims = vec![state_dim];
        dims.extend(&config.hidden);
        dims.push(action_dim);
        let actor = Mlp::new(&dims, Activation::Relu, head, action_high.to_vec(), &mut init)?;
        dims[0] = state_dim + action_dim;
        *dims.last_mut().unwrap() = 1;
        let critic1 = Mlp::uniform_head(&dims, Activation::Identity, 1.0, &mut init)?;
        let critic2 = Mlp::uniform_head(&dims, Activation::Identity, 1.0, &mut init)?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, config.adam)?,
            critic1_opt: AdamState::new(&critic1, config.adam)?,
            critic2_opt: AdamState::new(&critic2, config.adam)?,
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            buffer: ReplayBuffer::new(config.buffer_capacity, state_dim, action_dim),
            state_dim,
            max_action: action_low
                .iter()
                .zip(action_high)
                .map(|(l, h)| 0.5 * (h - l))
                .collect(),
            action_low: action_low.to_vec(),
            action_high: action_high.to_vec(),
            control_period: None,
            env_steps: 0,
            critic_updates: 0,
            actor_updates: 0,
            noise_rng: stream(seed, Stream::ActionNoise),
            target_rng: stream(seed, Stream::TargetNoise),
            sample_rng: stream(seed, Stream::Sampling),
            config,
        })
    }

    pub fn config(&self) -> &Td3Config {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_high.len()
    }

    pub fn action_low(&self) -> &[f64] {
        &self.action_low
    }

    pub fn action_high(&self) -> &[f64] {
        &self.action_high
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    /// Seconds between decisions of the environment this agent was trained in.
    pub fn control_period(&self) -> Option<f64> {
        self.control_period
    }

    pub fn set_control_period(&mut self, dt: f64) {
        self.control_period = Some(dt);
    }

    /// Restores counters after loading a checkpoint.
    pub fn set_counters(&mut self, env_steps: u64, critic_updates: u64, actor_updates: u64) {
        self.env_steps = env_steps;
        self.critic_updates = critic_updates;
        self.actor_updates = actor_updates;
    }

    pub fn in_warmup(&self) -> bool {
        self.env_steps < self.config.warmup_steps
    }

    /// Deterministic action `π(s)`.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.actor.infer_one(state)
    }

    pub fn select_action(&mut self, state: &[f64], mode: ActMode) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(Error::ShapeMismatch {
                context: "agent state width",
                expected: self.state_dim,
                found: state.len(),
            });
        }
        match mode {
            ActMode::Greedy => self.act(state),
            ActMode::Explore if self.in_warmup() => Ok(self
                .action_low
                .iter()
                .zip(&self.action_high)
                .map(|(&l, &h)| self.noise_rng.gen_range(l..=h))
                .collect()),
            ActMode::Explore => {
                let mut a = self.act(state)?;
                let sigma = self.config.exploration_noise;
                for (j, v) in a.iter_mut().enumerate() {
                    let noise = gaussian(&mut self.noise_rng, sigma * self.max_action[j]);
                    *v = (*v + noise).clamp(self.action_low[j], self.action_high[j]);
                }
                Ok(a)
            }
        }
    }

    /// Stores a transition and counts it as one environment step.
    pub fn record(&mut self, t: &Transition) -> Result<()> {
        self.buffer.push(t)?;
        self.env_steps += 1;
        Ok(())
    }

    /// Whether `train_step` should run after the latest `record`.
    pub fn ready_to_train(&self) -> bool {
        self.env_steps > self.config.warmup_steps && self.buffer.len() >= self.config.batch_size
    }

    /// One critic update, plus an actor update every `policy_delay` calls.
    pub fn train_step(&mut self) -> Result<()> {
        let batch = self
            .buffer
            .sample(self.config.batch_size, &mut self.sample_rng)?;
        self.critic_update(&batch)?;
        if self.critic_updates % self.config.policy_delay == 0 {
            self.actor_update(&batch)?;
        }
        Ok(())
    }

    /// Smoothed target action `clip(π'(s') + clip(ε, −c, c), low, high)`.
    pub fn target_actions(&mut self, next_states: &Tensor) -> Result<Tensor> {
        let mut a = self.actor_target.infer(next_states)?;
        let dim = self.action_dim();
        let (sigma, clip) = (self.config.policy_noise, self.config.noise_clip);
        for (i, v) in a.data_mut().iter_mut().enumerate() {
            let j = i % dim;
            let m = self.max_action[j];
            let eps = gaussian(&mut self.target_rng, sigma * m).clamp(-clip * m, clip * m);
            *v = (*v + eps).clamp(self.action_low[j], self.action_high[j]);
        }
        Ok(a)
    }

    /// `y = r + mask·γ·min(Q'₁, Q'₂)(s', ã')`.
    pub fn td_targets(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let next_a = self.target_actions(&batch.next_states)?;
        let input = concat_cols(&batch.next_states, &next_a)?;
        let q1 = self.critic1_target.infer(&input)?;
        let q2 = self.critic2_target.infer(&input)?;
        let gamma = self.config.gamma;
        Ok(batch
            .rewards
            .iter()
            .zip(&batch.masks)
            .zip(q1.data().iter().zip(q2.data()))
            .map(|((&r, &m), (&a, &b))| r + m * gamma * a.min(b))
            .collect())
    }

    /// One Adam step on each critic towards the shared TD target.
    /// Returns the two mean squared errors.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<(f64, f64)> {
        if batch.is_empty() {
            return Err(Error::InsufficientSamples {
                available: 0,
                requested: self.config.batch_size,
            });
        }
        let y = self.td_targets(batch)?;
        let input = concat_cols(&batch.states, &batch.actions)?;
        let l1 = regress(&mut self.critic1, &mut self.critic1_opt, &input, &y)?;
        let l2 = regress(&mut self.critic2, &mut self.critic2_opt, &input, &y)?;
        self.critic_updates += 1;
        Ok((l1, l2))
    }

    /// Loss `−mean Q₁(s, π(s))` with the actor's gradient slots filled.
    pub fn actor_loss_backward(&mut self, states: &Tensor) -> Result<f64> {
        let state_dim = self.state_dim;
        let critic = &mut self.critic1;
        let actor = &mut self.actor;
        let actions = actor.forward(states)?;
        let (loss, da) = critic_action_gradient(critic, states, &actions, state_dim)?;
        actor.backward(&da)?;
        Ok(loss)
    }

    /// Deterministic policy-gradient step on the actor, then Polyak updates
    /// of all three target networks.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<f64> {
        let loss = self.actor_loss_backward(&batch.states)?;
        self.actor_opt.step(&mut self.actor)?;
        let tau = self.config.tau;
        self.actor_target.soft_update(&self.actor, tau)?;
        self.critic1_target.soft_update(&self.critic1, tau)?;
        self.critic2_target.soft_update(&self.critic2, tau)?;
        self.actor_updates += 1;
        Ok(loss)
    }
}

/// Mean-squared regression step of `net` onto `targets`.
fn regress(net: &mut Mlp, opt: &mut AdamState, input: &Tensor, targets: &[f64]) -> Result<f64> {
    let q = net.forward(input)?;
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let grad: Vec<f64> = q
        .data()
        .iter()
        .zip(targets)
        .map(|(&q, &y)| {
            loss += (q - y) * (q - y);
            2.0 * (q - y) / n
        })
        .collect();
    net.backward(&Tensor::matrix(targets.len(), 1, grad)?)?;
    opt.step(net)?;
    Ok(loss / n)
}

/// `(−mean Q(s, a), ∂(−mean Q)/∂a)` through `critic`.
fn critic_action_gradient(
    critic: &mut Mlp,
    states: &Tensor,
    actions: &Tensor,
    state_dim: usize,
) -> Result<(f64, Tensor)> {
    let input = concat_cols(states, actions)?;
    let q = critic.forward(&input)?;
    let n = q.rows();
    let loss = -q.data().iter().sum::<f64>() / n as f64;
    let up = Tensor::matrix(n, 1, vec![-1.0 / n as f64; n])?;
    let d_input = critic.backward(&up)?;
    let a_dim = actions.cols();
    let mut da = Vec::with_capacity(n * a_dim);
    for i in 0..n {
        da.extend_from_slice(&d_input.row(i)[state_dim..]);
    }
    Ok((loss, Tensor::matrix(n, a_dim, da)?))
}

/// One actor step against an arbitrary differentiable value of the action.
///
/// `value_grad(actions)` returns the loss and its gradient with respect to
/// the actions; the gradient is back-propagated through `actor`.
pub fn policy_gradient_step<F>(
    actor: &mut Mlp,
    opt: &mut AdamState,
    states: &Tensor,
    mut value_grad: F,
) -> Result<f64>
where
    F: FnMut(&Tensor) -> Result<(f64, Tensor)>,
{
    let actions = actor.forward(states)?;
    let (loss, da) = value_grad(&actions)?;
    actor.backward(&da)?;
    opt.step(actor)?;
    Ok(loss)
}

/// Horizontal concatenation `[a | b]` of two matrices with equal row count.
pub fn concat_cols(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch {
            context: "concatenated rows",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    let (ca, cb) = (a.cols(), b.cols());
    let mut data = Vec::with_capacity(a.rows() * (ca + cb));
    for i in 0..a.rows() {
        data.extend_from_slice(a.row(i));
        data.extend_from_slice(b.row(i));
    }
    Tensor::matrix(a.rows(), ca + cb, data)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, std).expect("std is finite and positive").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Td3Config {
        Td3Config {
            hidden: vec![8, 8],
            batch_size: 4,
            warmup_steps: 0,
            ..Td3Config::default()
        }
    }

    fn agent() -> Td3Agent {
        Td3Agent::new(2, &[-2.0], &[2.0], small(), 1).unwrap()
    }

    /// Turns the last layer of `net` into the constant `c`.
    fn constant(net: &mut Mlp, c: f64) {
        let last = net.layers_mut().last_mut().unwrap();
        last.weight.data_mut().fill(0.0);
        last.bias.data_mut().fill(c);
    }

    fn batch(rewards: &[f64], masks: &[f64]) -> Batch {
        let n = rewards.len();
        Batch {
            states: Tensor::matrix(n, 2, vec![0.1; 2 * n]).unwrap(),
            actions: Tensor::matrix(n, 1, vec![0.5; n]).unwrap(),
            rewards: rewards.to_vec(),
            next_states: Tensor::matrix(n, 2, vec![-0.3; 2 * n]).unwrap(),
            masks: masks.to_vec(),
        }
    }

    #[test]
    fn greedy_is_deterministic_and_explore_is_bounded() {
        let mut ag = agent();
        let s = [0.3, -0.2];
        assert_eq!(
            ag.select_action(&s, ActMode::Greedy).unwrap(),
            ag.select_action(&s, ActMode::Greedy).unwrap()
        );
        ag.config.exploration_noise = 5.0;
        for _ in 0..500 {
            let a = ag.select_action(&s, ActMode::Explore).unwrap()[0];
            assert!((-2.0..=2.0).contains(&a));
        }
    }

    #[test]
    fn target_uses_minimum_of_twin_critics() {
        let mut ag = agent();
        constant(&mut ag.critic1_target, 3.0);
        constant(&mut ag.critic2_target, -1.5);
        let y = ag.td_targets(&batch(&[1.0, 2.0], &[1.0, 1.0])).unwrap();
        assert_eq!(y, vec![1.0 + 0.99 * -1.5, 2.0 + 0.99 * -1.5]);
        constant(&mut ag.critic1_target, -4.0);
        let y = ag.td_targets(&batch(&[1.0], &[1.0])).unwrap();
        assert_eq!(y, vec![1.0 + 0.99 * -4.0]);
    }

    #[test]
    fn terminal_and_zero_discount_targets_are_the_reward() {
        let mut ag = agent();
        let y = ag.td_targets(&batch(&[0.7, -0.2], &[0.0, 0.0])).unwrap();
        assert_eq!(y, vec![0.7, -0.2]);
        ag.config.gamma = 0.0;
        let y = ag.td_targets(&batch(&[0.7, -0.2], &[1.0, 1.0])).unwrap();
        assert_eq!(y, vec![0.7, -0.2]);
    }

    #[test]
    fn smoothing_noise_is_clipped() {
        let mut ag = agent();
        ag.config.policy_noise = 10.0;
        let s = Tensor::matrix(64, 2, (0..128).map(|i| (i as f64 * 0.1).sin()).collect()).unwrap();
        let clean = ag.actor_target.infer(&s).unwrap();
        let noisy = ag.target_actions(&s).unwrap();
        for (c, n) in clean.data().iter().zip(noisy.data()) {
            assert!((c - n).abs() <= 0.5 * 2.0 + 1e-12);
            assert!((-2.0..=2.0).contains(n));
        }
    }

    #[test]
    fn policy_delay_counts() {
        let mut ag = agent();
        for i in 0..10 {
            ag.record(&Transition {
                state: vec![i as f64 * 0.1, 0.0],
                action: vec![0.1],
                reward: 1.0,
                next_state: vec![0.0, 0.1],
                mask: 1.0,
            })
            .unwrap();
        }
        for k in 1..=9u64 {
            ag.train_step().unwrap();
            assert_eq!(ag.critic_updates(), k);
            assert_eq!(ag.actor_updates(), k / 2);
        }
    }

    #[test]
    fn critic_update_on_empty_batch_errors() {
        let mut ag = agent();
        let empty = Batch {
            states: Tensor::zeros(&[1, 2]),
            actions: Tensor::zeros(&[1, 1]),
            rewards: vec![],
            next_states: Tensor::zeros(&[1, 2]),
            masks: vec![],
        };
        assert!(ag.critic_update(&empty).is_err());
        assert!(ag.train_step().is_err());
    }

    #[test]
    fn bounds_must_fit_head() {
        assert!(Td3Agent::new(2, &[-1.0], &[2.0], small(), 0).is_err());
        assert!(Td3Agent::with_head(
            2,
            &[-1.0, 0.0],
            &[1.0, 1.0],
            vec![Activation::Tanh, Activation::Sigmoid],
            small(),
            0
        )
        .is_ok());
    }
}
