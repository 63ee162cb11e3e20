//! Real-time control with one decision of latency per layer.
//!
//! An action chosen at step `k` is applied during step `k + 1`; the agent
//! sees the state together with the action still in flight. [`DelayedEnv`]
//! does this for any environment, so a plain learner trains on it unchanged.
//! Wrapping a [`MultiRateStepper`](crate::envs::MultiRateStepper) gives a
//! slow layer whose choices land one whole window later.
//!
//! The layered real-time controller delays both layers at their own rates:
//! the slow choice made at the start of window `j` is held through window
//! `j + 1`, and the fast choice made at base step `k` is added to the slow
//! action applied at step `k + 1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::envs::{Env, EnvSpec, MultiRateStepper, StepResult};
use crate::metrics::ComputeStep;
use crate::nn::Mlp;
use crate::rng::{child_seed, stream, Stream};
use crate::td3::{
    eval_seeds, train, ActMode, LearningCurve, Td3Agent, Td3Config, TrainOptions, Transition,
};
use crate::tla::{
    check_period, combine, fast_reward_shaping, threshold_fast, TlaAction, TlaConfig, TlaEpisode,
    TlaEval, Variant,
};
use crate::{Error, Result};

/// Environment whose actions take effect one step after they are chosen.
///
/// Observations are `state ++ pending`, where `pending` is the action passed
/// to the previous `step` (zeros after `reset`).
#[derive(Debug, Clone)]
pub struct DelayedEnv<E> {
    env: E,
    spec: EnvSpec,
    pending: Vec<f64>,
    applied: Vec<Vec<f64>>,
}

impl<E: Env> DelayedEnv<E> {
    pub fn new(env: E) -> Self {
        let mut spec = env.spec().clone();
        spec.state_dim += spec.action_dim;
        let pending = vec![0.0; spec.action_dim];
        Self {
            env,
            spec,
            pending,
            applied: Vec::new(),
        }
    }

    /// Action that the next `step` will apply.
    pub fn pending(&self) -> &[f64] {
        &self.pending
    }

    /// Actions applied since the last reset, in order.
    pub fn applied(&self) -> &[Vec<f64>] {
        &self.applied
    }

    pub fn inner(&self) -> &E {
        &self.env
    }

    pub fn inner_mut(&mut self) -> &mut E {
        &mut self.env
    }

    fn observe(&self, state: Vec<f64>) -> Vec<f64> {
        let mut obs = state;
        obs.extend_from_slice(&self.pending);
        obs
    }
}

impl<E: Env> Env for DelayedEnv<E> {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.pending.iter_mut().for_each(|a| *a = 0.0);
        self.applied.clear();
        let s = self.env.reset(seed);
        self.observe(s)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let chosen = crate::envs::check_action(self.env.spec(), action)?;
        let apply = core::mem::replace(&mut self.pending, chosen);
        let mut r = self.env.step(&apply)?;
        self.applied.push(apply);
        r.next_state = self.observe(r.next_state);
        Ok(r)
    }
}

/// Slow-layer training environment: held for `n` base steps and delayed by
/// one window.
pub fn delayed_slow_env<E: Env>(env: E, n: usize) -> Result<DelayedEnv<MultiRateStepper<E>>> {
    Ok(DelayedEnv::new(MultiRateStepper::new(env, n)?))
}

/// Bookkeeping for the delayed two-layer controller within one episode.
struct LayeredDelay<'a> {
    slow: &'a Mlp,
    n: usize,
    augment: bool,
    k: usize,
    /// Slow action applied in the current window.
    slow_current: Vec<f64>,
    /// Slow action chosen at the start of the current window.
    slow_next: Vec<f64>,
    /// Slow action the current fast choice will be added to.
    slow_after: Vec<f64>,
    /// Fast action chosen last step, applied this step.
    fast_pending: Vec<f64>,
    /// Combined action applied this step.
    combined: Vec<f64>,
    slow_pass: bool,
}

impl<'a> LayeredDelay<'a> {
    fn new(slow: &'a Mlp, n: usize, augment: bool, action_dim: usize) -> Self {
        let zeros = vec![0.0; action_dim];
        Self {
            slow,
            n,
            augment,
            k: 0,
            slow_current: zeros.clone(),
            slow_next: zeros.clone(),
            slow_after: zeros.clone(),
            fast_pending: zeros.clone(),
            combined: zeros,
            slow_pass: false,
        }
    }

    /// Advances the slow layer to base step `k` and returns the fast
    /// observation `state ++ combined_pending (++ slow_after)`.
    fn observe(&mut self, state: &[f64], spec: &EnvSpec) -> Result<Vec<f64>> {
        self.slow_pass = self.k % self.n == 0;
        if self.slow_pass {
            if self.k > 0 {
                self.slow_current = core::mem::take(&mut self.slow_next);
            }
            let mut x = state.to_vec();
            x.extend_from_slice(&self.slow_current);
            self.slow_next = self.slow.infer_one(&x)?;
        }
        self.slow_after = if (self.k + 1) % self.n == 0 {
            self.slow_next.clone()
        } else {
            self.slow_current.clone()
        };
        self.combined = combine(
            &self.slow_current,
            &self.fast_pending,
            &spec.action_low,
            &spec.action_high,
        );
        let mut obs = state.to_vec();
        obs.extend_from_slice(&self.combined);
        if self.augment {
            obs.extend_from_slice(&self.slow_after);
        }
        Ok(obs)
    }

    /// Queues the fast choice and returns the action chosen for the next step
    /// together with whether the fast part was suppressed.
    fn choose(&mut self, fast: Vec<f64>, spec: &EnvSpec, thresh: Option<(f64, crate::tla::ThresholdMode)>) -> (Vec<f64>, bool) {
        let (effective, suppressed) = match thresh {
            Some((t, mode)) => threshold_fast(
                &self.slow_after,
                &fast,
                &spec.action_low,
                &spec.action_high,
                t,
                mode,
            ),
            None => (fast, false),
        };
        self.fast_pending = effective;
        self.k += 1;
        let chosen = combine(
            &self.slow_after,
            &self.fast_pending,
            &spec.action_low,
            &spec.action_high,
        );
        (chosen, suppressed)
    }
}

/// Fast-layer observation width in the delayed setting.
pub fn realtime_fast_dim(spec: &EnvSpec, augment: bool) -> usize {
    spec.state_dim + spec.action_dim * if augment { 2 } else { 1 }
}

fn check_slow(slow: &Td3Agent, spec: &EnvSpec, n: usize) -> Result<()> {
    check_period(slow, spec.base_dt * n as f64, "slow")?;
    if slow.state_dim() != spec.state_dim + spec.action_dim {
        return Err(Error::ShapeMismatch {
            context: "delayed slow agent state width",
            expected: spec.state_dim + spec.action_dim,
            found: slow.state_dim(),
        });
    }
    Ok(())
}

/// Greedy episode of the delayed layered controller. `actions[k].combined`
/// is the action applied at step `k`; `chosen[k]` is the one queued for
/// step `k + 1`.
pub fn run_tla_realtime_episode<E: Env + ?Sized>(
    env: &mut E,
    seed: u64,
    slow: &Mlp,
    fast: &Mlp,
    cfg: &TlaConfig,
    thresh: f64,
) -> Result<(TlaEpisode, Vec<Vec<f64>>)> {
    let spec = env.spec().clone();
    let mut ctl = LayeredDelay::new(slow, cfg.n, cfg.augmentation_enabled, spec.action_dim);
    let mut state = env.reset(seed);
    let mut ep = TlaEpisode::default();
    let mut chosen_trace = Vec::new();
    loop {
        let obs = ctl.observe(&state, &spec)?;
        let raw = fast.infer_one(&obs)?;
        let applied = ctl.combined.clone();
        let slow_applied = ctl.slow_current.clone();
        let slow_pass = ctl.slow_pass;
        let (chosen, suppressed) =
            ctl.choose(raw.clone(), &spec, Some((thresh, cfg.threshold_mode)));
        let r = env.step(&applied)?;
        let action = TlaAction {
            slow: slow_applied,
            fast: raw,
            gate: false,
            combined: applied,
            fast_suppressed: suppressed,
        };
        let pass = ComputeStep {
            slow_pass,
            fast_pass: true,
        };
        chosen_trace.push(chosen);
        let done = r.done();
        let next = r.next_state.clone();
        ep.push(core::mem::replace(&mut state, next), action, pass, &r);
        if done {
            return Ok((ep, chosen_trace));
        }
    }
}

pub fn eval_tla_realtime<E: Env + ?Sized>(
    env: &mut E,
    slow: &Mlp,
    fast: &Mlp,
    cfg: &TlaConfig,
    thresh: f64,
    seeds: &[u64],
) -> Result<TlaEval> {
    let episodes = seeds
        .iter()
        .map(|&s| run_tla_realtime_episode(env, s, slow, fast, cfg, thresh).map(|e| e.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(TlaEval::from_episodes(episodes))
}

/// Evaluation threshold of the real-time controller: 0.3 of the largest
/// action half-width.
pub fn realtime_threshold(spec: &EnvSpec) -> f64 {
    0.3 * spec.max_action().into_iter().fold(0.0, f64::max)
}

/// Trains the fast layer of the delayed controller on top of a frozen slow
/// agent that was trained on [`delayed_slow_env`]. `env` is the undelayed
/// base-rate task; the delays are simulated here.
pub fn train_tla_realtime_fast<E, V>(
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
    if cfg.variant != Variant::ClosedLoop {
        return Err(Error::InvalidConfig(
            "the real-time controller uses the closed-loop variant".into(),
        ));
    }
    opts.validate()?;
    check_slow(slow, &spec, cfg.n)?;
    let mut fast = Td3Agent::new(
        realtime_fast_dim(&spec, cfg.augmentation_enabled),
        &spec.action_low,
        &spec.action_high,
        td3,
        child_seed(opts.seed, 1),
    )?;
    fast.set_control_period(spec.base_dt);
    let lambda = if cfg.penalty_enabled { cfg.fast_penalty } else { 0.0 };
    let thresh = realtime_threshold(&spec);

    let seeds = eval_seeds(opts.seed, opts.eval_episodes);
    let mut episode_rng = stream(opts.seed, Stream::Env);
    let mut curve = LearningCurve::default();
    let evaluate = |env: &mut V, fast: &Td3Agent| {
        eval_tla_realtime(env, &slow.actor, &fast.actor, cfg, thresh, &seeds).map(|e| e.stats)
    };
    curve.push(0, &evaluate(eval_env, &fast)?);

    let new_episode = |env: &mut E, rng: &mut crate::rng::RunRng| {
        let state = env.reset(rng.gen());
        let mut ctl = LayeredDelay::new(&slow.actor, cfg.n, cfg.augmentation_enabled, spec.action_dim);
        let obs = ctl.observe(&state, &spec);
        obs.map(|o| (ctl, o))
    };
    let (mut ctl, mut obs) = new_episode(env, &mut episode_rng)?;
    for step in 1..=opts.total_steps {
        let a_f = fast.select_action(&obs, ActMode::Explore)?;
        let applied = ctl.combined.clone();
        ctl.choose(a_f.clone(), &spec, None);
        let r = env.step(&applied)?;
        let next_obs = ctl.observe(&r.next_state, &spec)?;
        fast.record(&Transition {
            state: obs,
            reward: fast_reward_shaping(r.reward, &a_f, lambda),
            action: a_f,
            next_state: next_obs.clone(),
            mask: if r.terminated { 0.0 } else { 1.0 },
        })?;
        if r.done() {
            (ctl, obs) = new_episode(env, &mut episode_rng)?;
        } else {
            obs = next_obs;
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

/// Output of the full delayed layered pipeline.
#[derive(Debug, Clone)]
pub struct RealtimeRun {
    pub slow: Td3Agent,
    pub fast: Td3Agent,
    pub slow_curve: LearningCurve,
    pub fast_curve: LearningCurve,
}

/// Pre-trains the slow layer at `n·dt` under its own one-window delay, then
/// the fast layer at `dt` on top of it. `make_env` builds a fresh base task.
pub fn train_tla_realtime<E, F>(
    mut make_env: F,
    td3: Td3Config,
    cfg: &TlaConfig,
    slow_opts: &TrainOptions,
    fast_opts: &TrainOptions,
) -> Result<RealtimeRun>
where
    E: Env,
    F: FnMut() -> E,
{
    let probe = make_env();
    let spec = probe.spec().clone();
    cfg.validate(&spec)?;
    let mut slow_env = delayed_slow_env(probe, cfg.n)?;
    let mut slow_eval = delayed_slow_env(make_env(), cfg.n)?;
    let mut slow = Td3Agent::new(
        spec.state_dim + spec.action_dim,
        &spec.action_low,
        &spec.action_high,
        td3.clone(),
        slow_opts.seed,
    )?;
    let slow_curve = train(&mut slow_env, &mut slow_eval, &mut slow, slow_opts)?;
    let (fast, fast_curve) =
        train_tla_realtime_fast(&mut make_env(), &mut make_env(), &slow, td3, cfg, fast_opts)?;
    Ok(RealtimeRun {
        slow,
        fast,
        slow_curve,
        fast_curve,
    })
}
