//! Seeded training pipelines for every algorithm, final evaluation and the
//! per-run metrics.

use std::path::Path;

use rayon::prelude::*;

use tla_core::envs::{Env, MultiRateStepper};
use tla_core::metrics::{normalized_auc, ComputeStep};
use tla_core::nn::Mlp;
use tla_core::realtime::{
    realtime_threshold, run_tla_realtime_episode, train_tla_realtime, DelayedEnv,
};
use tla_core::td3::{eval_seeds, rollout, train, LearningCurve, Td3Agent, TrainOptions};
use tla_core::tla::{
    eval_tla_c, eval_tla_o, train_tla_c, train_tla_o, GateOverride, TlaAction, TlaEpisode, TlaEval,
};

use crate::checkpoint;
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output;
use crate::plot;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// `(step, mean eval return)` of the main training phase.
    pub learning_curve: Vec<(u64, f64)>,
    pub final_return_mean: f64,
    pub final_return_std: f64,
    pub normalized_auc: f64,
    pub action_repetition_pct: f64,
    pub decisions_mean: f64,
}

impl RunMetrics {
    pub const HEADER: [&'static str; 6] = [
        "seed",
        "final_return_mean",
        "final_return_std",
        "normalized_auc",
        "action_repetition_pct",
        "decisions_mean",
    ];

    fn row(&self, label: String) -> Vec<String> {
        vec![
            label,
            self.final_return_mean.to_string(),
            self.final_return_std.to_string(),
            self.normalized_auc.to_string(),
            self.action_repetition_pct.to_string(),
            self.decisions_mean.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub enum Agents {
    Single(Td3Agent),
    /// Both layers; the pre-trained one is frozen during the main phase.
    Layered { slow: Td3Agent, fast: Td3Agent },
}

#[derive(Debug, Clone)]
pub struct FinalEval {
    pub eval: TlaEval,
    /// Real-time variants: the action queued at each step, per episode.
    pub chosen: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    /// Main phase; for layered algorithms, training of the upper layer.
    pub curve: LearningCurve,
    /// Training curve of the pre-trained layer, at its own step count.
    pub pretrain_curve: Option<LearningCurve>,
    pub agents: Agents,
    pub final_eval: FinalEval,
    pub metrics: RunMetrics,
}

fn options(cfg: &ExperimentConfig, seed: u64, total_steps: u64, eval_every: u64) -> TrainOptions {
    TrainOptions {
        total_steps,
        eval_every: eval_every.max(1),
        eval_episodes: cfg.eval_episodes,
        seed,
    }
}

fn single_episode(ep: tla_core::td3::EpisodeRecord) -> TlaEpisode {
    let actions = ep
        .steps
        .iter()
        .map(|s| TlaAction {
            slow: Vec::new(),
            fast: s.action.clone(),
            gate: false,
            combined: s.action.clone(),
            fast_suppressed: false,
        })
        .collect();
    let compute = vec![
        ComputeStep {
            slow_pass: false,
            fast_pass: true,
        };
        ep.steps.len()
    ];
    TlaEpisode {
        record: ep,
        actions,
        compute,
    }
}

fn eval_single<E: Env + ?Sized>(env: &mut E, actor: &Mlp, seeds: &[u64]) -> Result<FinalEval> {
    let episodes = seeds
        .iter()
        .map(|&s| rollout(env, s, |x| actor.infer_one(x)).map(single_episode))
        .collect::<tla_core::Result<Vec<_>>>()?;
    Ok(FinalEval {
        eval: TlaEval::from_episodes(episodes),
        chosen: None,
    })
}

/// Greedy evaluation with the executed (applied) actions recorded; the
/// chosen actions go to `chosen`. States are reported without the pending
/// action.
fn eval_delayed(cfg: &ExperimentConfig, actor: &Mlp, seeds: &[u64]) -> Result<FinalEval> {
    let mut env = DelayedEnv::new(cfg.env.make());
    let sd = cfg.env.make().spec().state_dim;
    let mut episodes = Vec::new();
    let mut chosen = Vec::new();
    for &s in seeds {
        let ep = rollout(&mut env, s, |x| actor.infer_one(x))?;
        chosen.push(ep.actions());
        let mut single = single_episode(ep);
        for ((step, act), applied) in single
            .record
            .steps
            .iter_mut()
            .zip(&mut single.actions)
            .zip(env.applied())
        {
            step.state.truncate(sd);
            step.action = applied.clone();
            act.combined = applied.clone();
        }
        episodes.push(single);
    }
    Ok(FinalEval {
        eval: TlaEval::from_episodes(episodes),
        chosen: Some(chosen),
    })
}

/// Final greedy evaluation of trained agents on the run's evaluation seeds.
pub fn final_eval(cfg: &ExperimentConfig, seed: u64, agents: &Agents) -> Result<FinalEval> {
    let seeds = eval_seeds(seed, cfg.eval_episodes);
    let mut env = cfg.env.make();
    let tla = cfg.tla();
    match (cfg.algorithm, agents) {
        (Algorithm::Td3, Agents::Single(a)) => eval_single(&mut env, &a.actor, &seeds),
        (Algorithm::Td3Delayed, Agents::Single(a)) => eval_delayed(cfg, &a.actor, &seeds),
        (Algorithm::TlaC, Agents::Layered { slow, fast }) => Ok(FinalEval {
            eval: eval_tla_c(&mut env, &slow.actor, &fast.actor, &tla, tla.threshold, &seeds)?,
            chosen: None,
        }),
        (Algorithm::TlaO, Agents::Layered { slow, fast }) => Ok(FinalEval {
            eval: eval_tla_o(
                &mut env,
                &slow.actor,
                &fast.actor,
                tla.n,
                GateOverride::Learned,
                &seeds,
            )?,
            chosen: None,
        }),
        (Algorithm::TlaRealtime, Agents::Layered { slow, fast }) => {
            let thresh = realtime_threshold(env.spec());
            let mut episodes = Vec::new();
            let mut chosen = Vec::new();
            for &s in &seeds {
                let (ep, c) =
                    run_tla_realtime_episode(&mut env, s, &slow.actor, &fast.actor, &tla, thresh)?;
                episodes.push(ep);
                chosen.push(c);
            }
            Ok(FinalEval {
                eval: TlaEval::from_episodes(episodes),
                chosen: Some(chosen),
            })
        }
        _ => Err(HarnessError::config(format!(
            "agents do not fit algorithm {}",
            cfg.algorithm.as_str()
        ))),
    }
}

fn metrics(cfg: &ExperimentConfig, curve: &LearningCurve, fe: &FinalEval) -> Result<RunMetrics> {
    Ok(RunMetrics {
        learning_curve: curve.points.iter().map(|p| (p.step, p.mean)).collect(),
        final_return_mean: fe.eval.stats.mean,
        final_return_std: fe.eval.stats.std,
        normalized_auc: normalized_auc(&curve.means(), cfg.env.return_bounds())?,
        action_repetition_pct: fe.eval.repetition_pct(),
        decisions_mean: fe.eval.decisions_mean(),
    })
}

fn new_agent(cfg: &ExperimentConfig, state_dim: usize, seed: u64) -> Result<Td3Agent> {
    let env = cfg.env.make();
    let spec = env.spec();
    Ok(Td3Agent::new(
        state_dim,
        &spec.action_low,
        &spec.action_high,
        cfg.td3.clone(),
        seed,
    )?)
}

/// Trains and evaluates one seed. Layered algorithms pre-train their lower
/// or upper counterpart first (the slow layer at `n·dt` for the closed-loop
/// variants, the fast layer at `dt` for the open-loop one).
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    cfg.validate()?;
    let spec = cfg.env.make().spec().clone();
    let n = cfg.n as u64;
    let tla = cfg.tla();
    let main_opts = options(cfg, seed, cfg.total_steps, cfg.eval_every);
    let (curve, pretrain_curve, agents) = match cfg.algorithm {
        Algorithm::Td3 => {
            let mut agent = new_agent(cfg, spec.state_dim, seed)?;
            let curve = train(&mut cfg.env.make(), &mut cfg.env.make(), &mut agent, &main_opts)?;
            (curve, None, Agents::Single(agent))
        }
        Algorithm::Td3Delayed => {
            let mut agent = new_agent(cfg, spec.state_dim + spec.action_dim, seed)?;
            let mut env = DelayedEnv::new(cfg.env.make());
            let mut eval_env = DelayedEnv::new(cfg.env.make());
            let curve = train(&mut env, &mut eval_env, &mut agent, &main_opts)?;
            (curve, None, Agents::Single(agent))
        }
        Algorithm::TlaC => {
            let mut slow = new_agent(cfg, spec.state_dim, seed)?;
            let pre = options(cfg, seed, cfg.pretrain_steps(), cfg.eval_every / n);
            let mut slow_env = MultiRateStepper::new(cfg.env.make(), cfg.n)?;
            let mut slow_eval = MultiRateStepper::new(cfg.env.make(), cfg.n)?;
            let pre_curve = train(&mut slow_env, &mut slow_eval, &mut slow, &pre)?;
            let (fast, curve) = train_tla_c(
                &mut cfg.env.make(),
                &mut cfg.env.make(),
                &slow,
                cfg.td3.clone(),
                &tla,
                &main_opts,
            )?;
            (curve, Some(pre_curve), Agents::Layered { slow, fast })
        }
        Algorithm::TlaO => {
            let mut fast = new_agent(cfg, spec.state_dim, seed)?;
            let pre = options(cfg, seed, cfg.pretrain_steps(), cfg.eval_every);
            let pre_curve = train(&mut cfg.env.make(), &mut cfg.env.make(), &mut fast, &pre)?;
            let (slow, curve) = train_tla_o(
                &mut cfg.env.make(),
                &mut cfg.env.make(),
                &fast,
                cfg.td3.clone(),
                &tla,
                &main_opts,
            )?;
            (curve, Some(pre_curve), Agents::Layered { slow, fast })
        }
        Algorithm::TlaRealtime => {
            let pre = options(cfg, seed, cfg.pretrain_steps(), cfg.eval_every / n);
            let run = train_tla_realtime(|| cfg.env.make(), cfg.td3.clone(), &tla, &pre, &main_opts)?;
            let agents = Agents::Layered {
                slow: run.slow,
                fast: run.fast,
            };
            (run.fast_curve, Some(run.slow_curve), agents)
        }
    };
    let fe = final_eval(cfg, seed, &agents)?;
    let metrics = metrics(cfg, &curve, &fe)?;
    Ok(SeedRun {
        seed,
        curve,
        pretrain_curve,
        agents,
        final_eval: fe,
        metrics,
    })
}

/// Writes the per-seed artifacts into `dir`.
pub fn write_seed(cfg: &ExperimentConfig, run: &SeedRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    output::write_curve(&dir.join("curve.csv"), &run.curve)?;
    if let Some(c) = &run.pretrain_curve {
        output::write_curve(&dir.join("pretrain_curve.csv"), c)?;
    }
    output::write_table(
        &dir.join("metrics.csv"),
        &RunMetrics::HEADER,
        &[run.metrics.row(run.seed.to_string())],
    )?;
    if let Some(ep) = run.final_eval.eval.episodes.first() {
        let chosen = run.final_eval.chosen.as_ref().map(|c| c[0].as_slice());
        output::write_trajectory(&dir.join("trajectory.csv"), ep, chosen)?;
        if cfg.algorithm.is_layered() {
            output::write_activations(&dir.join("activations.csv"), ep)?;
        }
    }
    if cfg.checkpoints {
        match &run.agents {
            Agents::Single(a) => checkpoint::save(a, &dir.join("agent.ckpt"))?,
            Agents::Layered { slow, fast } => {
                checkpoint::save(slow, &dir.join("slow.ckpt"))?;
                checkpoint::save(fast, &dir.join("fast.ckpt"))?;
            }
        }
    }
    Ok(())
}

/// Loads the agents a previous run saved for `seed`.
pub fn load_agents(cfg: &ExperimentConfig, seed: u64) -> Result<Agents> {
    let dir = cfg.seed_dir(seed);
    if cfg.algorithm.is_layered() {
        Ok(Agents::Layered {
            slow: checkpoint::load(&dir.join("slow.ckpt"))?,
            fast: checkpoint::load(&dir.join("fast.ckpt"))?,
        })
    } else {
        Ok(Agents::Single(checkpoint::load(&dir.join("agent.ckpt"))?))
    }
}

/// Seed results in seed order plus the aggregate over seeds.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<SeedRun>,
    pub aggregate_curve: LearningCurve,
    pub mean_metrics: RunMetrics,
}

fn mean_metrics(runs: &[SeedRun], curve: &LearningCurve) -> RunMetrics {
    let avg = |f: fn(&RunMetrics) -> f64| {
        tla_core::metrics::mean_std(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>()).0
    };
    let finals: Vec<f64> = runs.iter().map(|r| r.metrics.final_return_mean).collect();
    RunMetrics {
        learning_curve: curve.points.iter().map(|p| (p.step, p.mean)).collect(),
        final_return_mean: avg(|m| m.final_return_mean),
        final_return_std: tla_core::metrics::mean_std(&finals).1,
        normalized_auc: avg(|m| m.normalized_auc),
        action_repetition_pct: avg(|m| m.action_repetition_pct),
        decisions_mean: avg(|m| m.decisions_mean),
    }
}

/// Runs every seed, writing each seed's files as soon as it finishes, then
/// the aggregate files. On failure, finished seeds stay on disk and the
/// first error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(HarnessError::io(out))?;
    let cfg_path = out.join("config.txt");
    std::fs::write(&cfg_path, cfg.to_text()).map_err(HarnessError::io(&cfg_path))?;

    let one = |&seed: &u64| -> Result<SeedRun> {
        let run = run_seed(cfg, seed)?;
        write_seed(cfg, &run, &cfg.seed_dir(seed))?;
        Ok(run)
    };
    let results: Vec<Result<SeedRun>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
        pool.install(|| cfg.seeds.par_iter().map(one).collect())
    } else {
        cfg.seeds.iter().map(one).collect()
    };
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let curves: Vec<&LearningCurve> = runs.iter().map(|r| &r.curve).collect();
    let aggregate_curve = output::aggregate_curves(&curves)?;
    let agg_path = out.join("aggregate_curve.csv");
    output::write_aggregate_curve(&agg_path, &aggregate_curve, runs.len())?;
    let mean = mean_metrics(&runs, &aggregate_curve);
    let mut rows: Vec<Vec<String>> = runs.iter().map(|r| r.metrics.row(r.seed.to_string())).collect();
    rows.push(mean.row("mean".into()));
    output::write_table(&out.join("metrics.csv"), &RunMetrics::HEADER, &rows)?;
    let title = format!("{} on {}", cfg.algorithm.as_str(), cfg.env.as_str());
    plot::plot_curve(&agg_path, &out.join("learning_curve.svg"), &title)?;
    Ok(ExperimentResult {
        runs,
        aggregate_curve,
        mean_metrics: mean,
    })
}
