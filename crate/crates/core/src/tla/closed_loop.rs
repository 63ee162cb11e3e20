use alloc::vec::Vec;

use rand::Rng;

use super::{
    check_period, combine, fast_observation, fast_observation_dim, fast_reward_shaping,
    threshold_fast, TlaAction, TlaConfig, TlaEpisode, TlaEval, Variant,
};
use crate::envs::Env;
use crate::metrics::ComputeStep;
use crate::nn::Mlp;
use crate::rng::{child_seed, stream, Stream};
use crate::td3::{eval_seeds, ActMode, LearningCurve, Td3Agent, Td3Config, TrainOptions, Transition};
use crate::{Error, Result};

/// Greedy closed-loop episode: the slow actor re-plans every `n` steps from
/// the live state, the fast actor runs every step, and its action is passed
/// through the threshold before being added.
pub fn run_tla_c_episode<E: Env + ?Sized>(
    env: &mut E,
    seed: u64,
    slow: &Mlp,
    fast: &Mlp,
    cfg: &TlaConfig,
    thresh: f64,
) -> Result<TlaEpisode> {
    let spec = env.spec().clone();
    let (low, high) = (&spec.action_low, &spec.action_high);
    let mut state = env.reset(seed);
    let mut ep = TlaEpisode::default();
    let mut slow_a = Vec::new();
    for k in 0.. {
        let slow_pass = k % cfg.n == 0;
        if slow_pass {
            slow_a = slow.infer_one(&state)?;
        }
        let raw = fast.infer_one(&fast_observation(&state, &slow_a, cfg.augmentation_enabled))?;
        let (effective, suppressed) =
            threshold_fast(&slow_a, &raw, low, high, thresh, cfg.threshold_mode);
        let combined = combine(&slow_a, &effective, low, high);
        let r = env.step(&combined)?;
        let action = TlaAction {
            slow: slow_a.clone(),
            fast: raw,
            gate: false,
            combined,
            fast_suppressed: suppressed,
        };
        let pass = ComputeStep {
            slow_pass,
            fast_pass: true,
        };
        let done = r.done();
        let next = r.next_state.clone();
        ep.push(core::mem::replace(&mut state, next), action, pass, &r);
        if done {
            break;
        }
    }
    Ok(ep)
}

pub fn eval_tla_c<E: Env + ?Sized>(
    env: &mut E,
    slow: &Mlp,
    fast: &Mlp,
    cfg: &TlaConfig,
    thresh: f64,
    seeds: &[u64],
) -> Result<TlaEval> {
    let episodes = seeds
        .iter()
        .map(|&s| run_tla_c_episode(env, s, slow, fast, cfg, thresh))
        .collect::<Result<Vec<_>>>()?;
    Ok(TlaEval::from_episodes(episodes))
}

/// Trains a fast agent on top of a frozen slow agent.
///
/// `env` runs at the base period; `slow` must have been trained at `n` times
/// that period. Only the fast agent explores. Its stored reward carries the
/// fast-action penalty when enabled; the threshold is applied only in the
/// evaluation points of the returned curve.
pub fn train_tla_c<E, V>(
    env: &mut E,
    eval_env: &mut V,
    slow: &Td3Agent,
    td3: Td3Config,
    cfg: &TlaConfig,
    opts: &TrainOptions,
) -> Result<(Td3Agent, LearningCurve)>
where
    E: Env + ?Sized,
    V: Env + ?Sized,
{
    let spec = env.spec().clone();
    cfg.validate(&spec)?;
    cfg.expect(Variant::ClosedLoop)?;
    opts.validate()?;
    check_period(slow, spec.base_dt * cfg.n as f64, "slow")?;
    if slow.state_dim() != spec.state_dim || slow.action_dim() != spec.action_dim {
        return Err(Error::ShapeMismatch {
            context: "slow agent dimensions",
            expected: spec.state_dim,
            found: slow.state_dim(),
        });
    }
    let obs_dim = fast_observation_dim(&spec, cfg.augmentation_enabled);
    let mut fast = Td3Agent::new(
        obs_dim,
        &spec.action_low,
        &spec.action_high,
        td3,
        child_seed(opts.seed, 1),
    )?;
    fast.set_control_period(spec.base_dt);

    let (low, high) = (&spec.action_low, &spec.action_high);
    let aug = cfg.augmentation_enabled;
    let lambda = cfg.penalty();
    let seeds = eval_seeds(opts.seed, opts.eval_episodes);
    let mut episode_rng = stream(opts.seed, Stream::Env);
    let mut curve = LearningCurve::default();
    let evaluate = |env: &mut V, fast: &Td3Agent| {
        eval_tla_c(env, &slow.actor, &fast.actor, cfg, cfg.threshold, &seeds).map(|e| e.stats)
    };
    curve.push(0, &evaluate(eval_env, &fast)?);

    let mut state = env.reset(episode_rng.gen());
    let mut slow_a = slow.act(&state)?;
    let mut k = 0usize;
    for step in 1..=opts.total_steps {
        let obs = fast_observation(&state, &slow_a, aug);
        let a_f = fast.select_action(&obs, ActMode::Explore)?;
        let r = env.step(&combine(&slow_a, &a_f, low, high))?;
        k += 1;
        if r.done() {
            // Bootstrapping is masked on termination; on truncation the next
            // slow action is what the controller would have used.
            let next_slow = if k % cfg.n == 0 {
                slow.act(&r.next_state)?
            } else {
                slow_a.clone()
            };
            fast.record(&Transition {
                state: obs,
                reward: fast_reward_shaping(r.reward, &a_f, lambda),
                action: a_f,
                next_state: fast_observation(&r.next_state, &next_slow, aug),
                mask: if r.terminated { 0.0 } else { 1.0 },
            })?;
            state = env.reset(episode_rng.gen());
            slow_a = slow.act(&state)?;
            k = 0;
        } else {
            if k % cfg.n == 0 {
                slow_a = slow.act(&r.next_state)?;
            }
            fast.record(&Transition {
                state: obs,
                reward: fast_reward_shaping(r.reward, &a_f, lambda),
                action: a_f,
                next_state: fast_observation(&r.next_state, &slow_a, aug),
                mask: 1.0,
            })?;
            state = r.next_state;
        }
        if fast.ready_to_train() {
            fast.train_step()?;
        }
        if opts.is_eval_step(step) {
            curve.push(step, &evaluate(eval_env, &fast)?);
        }
    }
    Ok((fast, curve))
}
