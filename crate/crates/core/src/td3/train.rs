use alloc::vec::Vec;

use rand::Rng;

use super::agent::{ActMode, Td3Agent};
use super::replay::Transition;
use crate::envs::Env;
use crate::metrics::mean_std;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Environment steps (of the environment handed to the trainer).
    pub total_steps: u64,
    /// Greedy evaluation period; a point is also recorded at step 0.
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(Error::InvalidConfig(
                "eval_every and eval_episodes must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_eval_step(&self, step: u64) -> bool {
        step % self.eval_every == 0 || step == self.total_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn push(&mut self, step: u64, stats: &EvalStats) {
        self.points.push(CurvePoint {
            step,
            mean: stats.mean,
            std: stats.std,
        });
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    /// `(step, mean return)` pairs.
    pub fn means(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.step as f64, p.mean)).collect()
    }
}

/// One executed step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeRecord {
    pub total_reward: f64,
    pub steps: Vec<StepRecord>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.state.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
    pub returns: Vec<f64>,
}

impl EvalStats {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&returns);
        Self { mean, std, returns }
    }
}

/// Plays one episode with `policy`, recording every step.
pub fn rollout<E, P>(env: &mut E, seed: u64, mut policy: P) -> Result<EpisodeRecord>
where
    E: Env + ?Sized,
    P: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut state = env.reset(seed);
    let mut ep = EpisodeRecord::default();
    loop {
        let action = policy(&state)?;
        let r = env.step(&action)?;
        ep.total_reward += r.reward;
        let done = r.done();
        ep.steps.push(StepRecord {
            state: core::mem::replace(&mut state, r.next_state),
            action,
            reward: r.reward,
            terminated: r.terminated,
            truncated: r.truncated,
        });
        if done {
            return Ok(ep);
        }
    }
}

/// Mean and (population) standard deviation of returns over the given seeds.
pub fn evaluate<E, P>(env: &mut E, seeds: &[u64], mut policy: P) -> Result<EvalStats>
where
    E: Env + ?Sized,
    P: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let returns = seeds
        .iter()
        .map(|&s| rollout(env, s, &mut policy).map(|ep| ep.total_reward))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalStats::from_returns(returns))
}

/// Fixed evaluation episode seeds for a run.
pub fn eval_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = stream(seed, Stream::Eval);
    (0..n).map(|_| rng.gen()).collect()
}

/// Standard off-policy loop: act, store, update once per step after warm-up,
/// and evaluate the greedy policy on fixed seeds every `eval_every` steps.
pub fn train<E, V>(
    env: &mut E,
    eval_env: &mut V,
    agent: &mut Td3Agent,
    opts: &TrainOptions,
) -> Result<LearningCurve>
where
    E: Env + ?Sized,
    V: Env + ?Sized,
{
    opts.validate()?;
    agent.set_control_period(env.spec().base_dt);
    let seeds = eval_seeds(opts.seed, opts.eval_episodes);
    let mut episode_rng = stream(opts.seed, Stream::Env);
    let mut curve = LearningCurve::default();
    curve.push(0, &evaluate(eval_env, &seeds, |s| agent.act(s))?);

    let mut state = env.reset(episode_rng.gen());
    for step in 1..=opts.total_steps {
        let action = agent.select_action(&state, ActMode::Explore)?;
        let r = env.step(&action)?;
        agent.record(&Transition {
            state: core::mem::take(&mut state),
            action,
            reward: r.reward,
            next_state: r.next_state.clone(),
            mask: if r.terminated { 0.0 } else { 1.0 },
        })?;
        state = if r.done() {
            env.reset(episode_rng.gen())
        } else {
            r.next_state
        };
        if agent.ready_to_train() {
            agent.train_step()?;
        }
        if opts.is_eval_step(step) {
            curve.push(step, &evaluate(eval_env, &seeds, |s| agent.act(s))?);
        }
    }
    Ok(curve)
}
