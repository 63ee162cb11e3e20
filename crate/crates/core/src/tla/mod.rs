//! Two-layer control: a slow controller deciding every `n` base steps and a
//! fast controller deciding every base step.
//!
//! Closed loop (`closed_loop`): the fast action is added to the held slow
//! action and the sum is clipped to the action box. Open loop (`open_loop`):
//! the slow controller also emits a gate; with the gate set, its action is
//! held for the whole window and the fast controller is not run.

mod closed_loop;
mod open_loop;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

pub use closed_loop::{eval_tla_c, run_tla_c_episode, train_tla_c};
pub use open_loop::{
    eval_tla_o, gated_bounds, run_tla_o_episode, train_tla_o, GateOverride,
};

use crate::envs::{EnvSpec, StepResult};
use crate::metrics::{action_repetition, mean_decisions, mean_std, ComputeStep};
use crate::td3::{EpisodeRecord, EvalStats, StepRecord, Td3Agent};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    ClosedLoop,
    OpenLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Zero the whole fast action when no dimension reaches the threshold.
    Joint,
    /// Zero each dimension whose influence is below the threshold.
    PerDimension,
}

/// Discount used by the gated slow learner for one window transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowDiscount {
    /// `γⁿ`: the window spans `n` base steps.
    Compounded,
    /// `γ`: the window is treated as a single step.
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TlaConfig {
    /// Base steps per slow decision.
    pub n: usize,
    /// Evaluation-time fast-action threshold, in action units.
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    /// λ in `r − λ·mean|a_f|`.
    pub fast_penalty: f64,
    pub penalty_enabled: bool,
    /// Feed the slow action to the fast policy.
    pub augmentation_enabled: bool,
    pub variant: Variant,
    pub window_discount: WindowDiscount,
}

impl TlaConfig {
    pub fn closed_loop(n: usize, fast_penalty: f64) -> Self {
        Self {
            n,
            threshold: 0.0,
            threshold_mode: ThresholdMode::Joint,
            fast_penalty,
            penalty_enabled: true,
            augmentation_enabled: true,
            variant: Variant::ClosedLoop,
            window_discount: WindowDiscount::Compounded,
        }
    }

    pub fn open_loop(n: usize) -> Self {
        Self {
            variant: Variant::OpenLoop,
            penalty_enabled: false,
            ..Self::closed_loop(n, 0.0)
        }
    }

    pub fn validate(&self, spec: &EnvSpec) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.fast_penalty.is_finite() && self.fast_penalty >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "fast penalty must be finite and non-negative, got {}",
                self.fast_penalty
            )));
        }
        let range = spec
            .action_low
            .iter()
            .zip(&spec.action_high)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max);
        if !(self.threshold >= 0.0 && self.threshold <= range) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, {range}], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    fn expect(&self, variant: Variant) -> Result<()> {
        if self.variant != variant {
            return Err(Error::InvalidConfig(format!(
                "expected a {variant:?} configuration, got {:?}",
                self.variant
            )));
        }
        Ok(())
    }

    fn penalty(&self) -> f64 {
        if self.penalty_enabled {
            self.fast_penalty
        } else {
            0.0
        }
    }
}

/// One executed base step of a layered controller.
#[derive(Debug, Clone, PartialEq)]
pub struct TlaAction {
    pub slow: Vec<f64>,
    /// Raw fast output; zeros when the fast layer did not run.
    pub fast: Vec<f64>,
    /// Open loop only: the slow action was held without the fast layer.
    pub gate: bool,
    pub combined: Vec<f64>,
    /// The fast action had no effect (thresholded away, or gated off).
    pub fast_suppressed: bool,
}

/// `clip(slow + fast, low, high)` elementwise.
pub fn combine(slow: &[f64], fast: &[f64], low: &[f64], high: &[f64]) -> Vec<f64> {
    slow.iter()
        .zip(fast)
        .zip(low.iter().zip(high))
        .map(|((s, f), (&l, &h))| (s + f).clamp(l, h))
        .collect()
}

/// Fast action after the evaluation threshold, and whether it was fully
/// suppressed. Influence in dimension `i` is `|combine(s, f)_i − s_i|`.
pub fn threshold_fast(
    slow: &[f64],
    fast: &[f64],
    low: &[f64],
    high: &[f64],
    thresh: f64,
    mode: ThresholdMode,
) -> (Vec<f64>, bool) {
    let combined = combine(slow, fast, low, high);
    let keep: Vec<bool> = combined
        .iter()
        .zip(slow)
        .map(|(c, s)| (c - s).abs() >= thresh)
        .collect();
    match mode {
        ThresholdMode::Joint => {
            if keep.iter().any(|&k| k) {
                (fast.to_vec(), false)
            } else {
                (vec![0.0; fast.len()], true)
            }
        }
        ThresholdMode::PerDimension => {
            let out: Vec<f64> = fast
                .iter()
                .zip(&keep)
                .map(|(&f, &k)| if k { f } else { 0.0 })
                .collect();
            (out, !keep.iter().any(|&k| k))
        }
    }
}

/// `r − λ·mean|a_f|`.
pub fn fast_reward_shaping(reward: f64, fast: &[f64], lambda: f64) -> f64 {
    if fast.is_empty() {
        return reward;
    }
    let mean = fast.iter().map(|f| f.abs()).sum::<f64>() / fast.len() as f64;
    reward - lambda * mean
}

/// Per-step reward credited to the gated slow learner: unchanged when the
/// gate held the slow action, otherwise negative rewards are doubled and
/// positive ones halved.
pub fn gate_reward(reward: f64, gate: bool) -> f64 {
    if gate {
        reward
    } else if reward <= 0.0 {
        2.0 * reward
    } else {
        0.5 * reward
    }
}

/// Splits a gated actor output `[a_s…, p]` into the slow action and the gate.
///
/// Greedy (`rng == None`): `g = p ≥ 0.5`. Exploring: `g ~ Bernoulli(p)`.
pub fn gate_decision<R: Rng + ?Sized>(output: &[f64], rng: Option<&mut R>) -> (Vec<f64>, bool) {
    let (action, p) = output.split_at(output.len().saturating_sub(1));
    let p = p.first().copied().unwrap_or(1.0);
    let g = match rng {
        None => p >= 0.5,
        Some(rng) => rng.gen::<f64>() < p,
    };
    (action.to_vec(), g)
}

/// Fast-layer input: the state, followed by the slow action if augmented.
pub fn fast_observation(state: &[f64], slow: &[f64], augment: bool) -> Vec<f64> {
    let mut obs = state.to_vec();
    if augment {
        obs.extend_from_slice(slow);
    }
    obs
}

pub fn fast_observation_dim(spec: &EnvSpec, augment: bool) -> usize {
    spec.state_dim + if augment { spec.action_dim } else { 0 }
}

/// Fails unless `agent` was trained with decision period `dt`.
pub fn check_period(agent: &Td3Agent, dt: f64, role: &str) -> Result<()> {
    match agent.control_period() {
        Some(p) if (p - dt).abs() <= 1e-9 * dt.abs().max(1.0) => Ok(()),
        other => Err(Error::InvalidConfig(format!(
            "{role} agent period {other:?} does not match the required {dt} s"
        ))),
    }
}

/// One evaluation episode of a layered controller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TlaEpisode {
    pub record: EpisodeRecord,
    pub actions: Vec<TlaAction>,
    pub compute: Vec<ComputeStep>,
}

impl TlaEpisode {
    pub fn push(&mut self, state: Vec<f64>, action: TlaAction, pass: ComputeStep, r: &StepResult) {
        self.record.total_reward += r.reward;
        self.record.steps.push(StepRecord {
            state,
            action: action.combined.clone(),
            reward: r.reward,
            terminated: r.terminated,
            truncated: r.truncated,
        });
        self.actions.push(action);
        self.compute.push(pass);
    }

    /// Base steps on which the fast action changed the executed action.
    pub fn fast_activations(&self) -> usize {
        self.actions.iter().filter(|a| !a.fast_suppressed).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TlaEval {
    pub stats: EvalStats,
    pub episodes: Vec<TlaEpisode>,
}

impl TlaEval {
    pub fn from_episodes(episodes: Vec<TlaEpisode>) -> Self {
        let returns = episodes.iter().map(|e| e.record.total_reward).collect();
        Self {
            stats: EvalStats::from_returns(returns),
            episodes,
        }
    }

    /// Mean over episodes of the percentage of repeated executed actions.
    /// Episodes shorter than two steps are skipped.
    pub fn repetition_pct(&self) -> f64 {
        let per: Vec<f64> = self
            .episodes
            .iter()
            .filter_map(|e| action_repetition(&e.record.actions()).ok())
            .collect();
        mean_std(&per).0
    }

    pub fn decisions_mean(&self) -> f64 {
        let traces: Vec<Vec<ComputeStep>> =
            self.episodes.iter().map(|e| e.compute.clone()).collect();
        mean_decisions(&traces)
    }

    /// Fraction of all evaluated base steps with an unsuppressed fast action.
    pub fn activation_rate(&self) -> f64 {
        let steps: usize = self.episodes.iter().map(|e| e.actions.len()).sum();
        let active: usize = self.episodes.iter().map(TlaEpisode::fast_activations).sum();
        if steps == 0 {
            0.0
        } else {
            active as f64 / steps as f64
        }
    }

    /// Mean over episodes of the fast-activation count.
    pub fn activations_mean(&self) -> f64 {
        let per: Vec<f64> = self
            .episodes
            .iter()
            .map(|e| e.fast_activations() as f64)
            .collect();
        mean_std(&per).0
    }
}
