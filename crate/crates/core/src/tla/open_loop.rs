use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{check_period, gate_decision, gate_reward, TlaAction, TlaConfig, TlaEpisode, TlaEval};
use super::{Variant, WindowDiscount};
use crate::envs::{Env, EnvSpec};
use crate::metrics::ComputeStep;
use crate::nn::{Activation, Mlp};
use crate::rng::{child_seed, stream, Stream};
use crate::td3::{eval_seeds, ActMode, LearningCurve, Td3Agent, Td3Config, TrainOptions, Transition};
use crate::{Error, Result};

/// How the gate is chosen during an evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOverride {
    /// Greedy gate from the slow actor.
    Learned,
    /// Gate forced to the given value; the slow actor still runs.
    Always(bool),
}

/// Action box and head of the gated slow actor: the environment box with a
/// tanh head, plus one logistic gate output in `[0, 1]`.
pub fn gated_bounds(spec: &EnvSpec) -> (Vec<f64>, Vec<f64>, Vec<Activation>) {
    let mut low = spec.action_low.clone();
    let mut high = spec.action_high.clone();
    let mut head = vec![Activation::Tanh; spec.action_dim];
    low.push(0.0);
    high.push(1.0);
    head.push(Activation::Sigmoid);
    (low, high, head)
}

/// Greedy open-loop episode. Each window starts with a slow forward pass; a
/// set gate holds the slow action for `n` steps, a cleared gate runs the fast
/// actor on every step of the window.
pub fn run_tla_o_episode<E: Env + ?Sized>(
    env: &mut E,
    seed: u64,
    slow: &Mlp,
    fast: &Mlp,
    n: usize,
    gate: GateOverride,
) -> Result<TlaEpisode> {
    let dim = env.spec().action_dim;
    let mut state = env.reset(seed);
    let mut ep = TlaEpisode::default();
    loop {
        let (a_s, learned) = gate_decision::<crate::rng::RunRng>(&slow.infer_one(&state)?, None);
        let g = match gate {
            GateOverride::Learned => learned,
            GateOverride::Always(g) => g,
        };
        for i in 0..n {
            let (f, combined) = if g {
                (vec![0.0; dim], a_s.clone())
            } else {
                let f = fast.infer_one(&state)?;
                (f.clone(), f)
            };
            let r = env.step(&combined)?;
            let action = TlaAction {
                slow: a_s.clone(),
                fast: f,
                gate: g,
                combined,
                fast_suppressed: g,
            };
            let pass = ComputeStep {
                slow_pass: i == 0,
                fast_pass: !g,
            };
            let done = r.done();
            let next = r.next_state.clone();
            ep.push(core::mem::replace(&mut state, next), action, pass, &r);
            if done {
                return Ok(ep);
            }
        }
    }
}

pub fn eval_tla_o<E: Env + ?Sized>(
    env: &mut E,
    slow: &Mlp,
    fast: &Mlp,
    n: usize,
    gate: GateOverride,
    seeds: &[u64],
) -> Result<TlaEval> {
    let episodes = seeds
        .iter()
        .map(|&s| run_tla_o_episode(env, s, slow, fast, n, gate))
        .collect::<Result<Vec<_>>>()?;
    Ok(TlaEval::from_episodes(episodes))
}

/// Trains a gated slow agent on top of a frozen fast agent.
///
/// `opts.total_steps` and `opts.eval_every` count base steps, so budgets
/// match a single-rate learner. One slow transition is stored per window:
/// the executed gate (0 or 1) as the last action component and the sum of
/// gate-shaped base rewards. After each window the slow learner makes one
/// update per base step the window lasted, so its update count matches a
/// single-rate learner with the same budget.
pub fn train_tla_o<E, V>(
    env: &mut E,
    eval_env: &mut V,
    fast: &Td3Agent,
    mut td3: Td3Config,
    cfg: &TlaConfig,
    opts: &TrainOptions,
) -> Result<(Td3Agent, LearningCurve)>
where
    E: Env + ?Sized,
    V: Env + ?Sized,
{
    let spec = env.spec().clone();
    cfg.validate(&spec)?;
    cfg.expect(Variant::OpenLoop)?;
    opts.validate()?;
    check_period(fast, spec.base_dt, "fast")?;
    if fast.state_dim() != spec.state_dim || fast.action_dim() != spec.action_dim {
        return Err(Error::ShapeMismatch {
            context: "fast agent dimensions",
            expected: spec.state_dim,
            found: fast.state_dim(),
        });
    }
    let n = cfg.n;
    if cfg.window_discount == WindowDiscount::Compounded {
        td3.gamma = libm::pow(td3.gamma, n as f64);
    }
    let (low, high, head) = gated_bounds(&spec);
    let seed = child_seed(opts.seed, 2);
    let mut slow = Td3Agent::with_head(spec.state_dim, &low, &high, head, td3, seed)?;
    slow.set_control_period(spec.base_dt * n as f64);
    let mut gate_rng = stream(seed, Stream::Gate);

    let seeds = eval_seeds(opts.seed, opts.eval_episodes);
    let mut episode_rng = stream(opts.seed, Stream::Env);
    let mut curve = LearningCurve::default();
    let evaluate = |env: &mut V, slow: &Td3Agent| {
        eval_tla_o(env, &slow.actor, &fast.actor, n, GateOverride::Learned, &seeds).map(|e| e.stats)
    };
    curve.push(0, &evaluate(eval_env, &slow)?);

    let mut state = env.reset(episode_rng.gen());
    let mut base = 0u64;
    while base < opts.total_steps {
        let raw = slow.select_action(&state, ActMode::Explore)?;
        let (a_s, g) = gate_decision(&raw, Some(&mut gate_rng));
        let start = state.clone();
        let mut window_reward = 0.0;
        let mut terminated = false;
        let mut done = false;
        let mut steps = 0;
        for _ in 0..n {
            steps += 1;
            let a = if g { a_s.clone() } else { fast.act(&state)? };
            let r = env.step(&a)?;
            base += 1;
            window_reward += gate_reward(r.reward, g);
            terminated = r.terminated;
            done = r.done();
            state = r.next_state;
            if opts.is_eval_step(base) {
                curve.push(base, &evaluate(eval_env, &slow)?);
            }
            if done || base == opts.total_steps {
                break;
            }
        }
        let mut stored = a_s;
        stored.push(if g { 1.0 } else { 0.0 });
        slow.record(&Transition {
            state: start,
            action: stored,
            reward: window_reward,
            next_state: state.clone(),
            mask: if terminated { 0.0 } else { 1.0 },
        })?;
        for _ in 0..steps {
            if slow.ready_to_train() {
                slow.train_step()?;
            }
        }
        if done {
            state = env.reset(episode_rng.gen());
        }
    }
    Ok((slow, curve))
}
