use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tla_harness::experiment::{final_eval, load_agents, run_seed, write_seed, Agents};
use tla_harness::sweep::{parse_range, threshold_sweep, write_sweep};
use tla_harness::{plot, run_experiment, Algorithm, ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "tla", about = "Train and evaluate layered fast/slow controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    env: Option<String>,
    /// Delayed (real-time) variant of the chosen algorithm.
    #[arg(long)]
    realtime: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(a) = &self.algo {
            cfg.set("algorithm", a)?;
        }
        if let Some(e) = &self.env {
            cfg.set("env", e)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("expected KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if self.realtime {
            cfg.algorithm = cfg.algorithm.delayed()?;
        }
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed and write curves, metrics and checkpoints.
    Train(Common),
    /// Re-evaluate saved checkpoints of each configured seed.
    Eval(Common),
    /// Evaluate a closed-loop pair over thresholds (fractions of max action).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0:0.05:1.0")]
        thresholds: String,
    },
    /// Draw an SVG from a curve CSV (step, mean, std) or a sweep CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value = "Learning curve")]
        title: String,
    },
}

fn print_metrics(label: &str, m: &tla_harness::RunMetrics) {
    println!(
        "{label}: final return {:.3} ± {:.3}, auc {:.4}, repetition {:.2}%, decisions {:.2}",
        m.final_return_mean,
        m.final_return_std,
        m.normalized_auc,
        m.action_repetition_pct,
        m.decisions_mean
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.resolve()?;
            let res = run_experiment(&cfg)?;
            for r in &res.runs {
                print_metrics(&format!("seed {}", r.seed), &r.metrics);
            }
            print_metrics("mean", &res.mean_metrics);
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Eval(c) => {
            let cfg = c.resolve()?;
            for &seed in &cfg.seeds {
                let agents = load_agents(&cfg, seed)?;
                let fe = final_eval(&cfg, seed, &agents)?;
                let e = &fe.eval;
                println!(
                    "seed {seed}: return {:.3} ± {:.3}, repetition {:.2}%, decisions {:.2}, fast activation {:.4}",
                    e.stats.mean,
                    e.stats.std,
                    e.repetition_pct(),
                    e.decisions_mean(),
                    e.activation_rate()
                );
                if let Some(ep) = e.episodes.first() {
                    let chosen = fe.chosen.as_ref().map(|c| c[0].as_slice());
                    let path = cfg.seed_dir(seed).join("eval_trajectory.csv");
                    tla_harness::output::write_trajectory(&path, ep, chosen)?;
                }
            }
        }
        Command::Sweep { common, thresholds } => {
            let mut cfg = common.resolve()?;
            if cfg.algorithm != Algorithm::TlaC {
                cfg.algorithm = Algorithm::TlaC;
            }
            let fractions = parse_range(&thresholds)?;
            let seed = cfg.seeds[0];
            let agents = match load_agents(&cfg, seed) {
                Ok(a) => a,
                Err(_) => {
                    eprintln!("no checkpoints for seed {seed}; training first");
                    let run = run_seed(&cfg, seed)?;
                    write_seed(&cfg, &run, &cfg.seed_dir(seed))?;
                    run.agents
                }
            };
            let Agents::Layered { slow, fast } = agents else {
                return Err(HarnessError::config("sweep needs a slow and a fast agent"));
            };
            let rows = threshold_sweep(&cfg, seed, &slow.actor, &fast.actor, &fractions)?;
            write_sweep(&cfg.output_dir, &rows)?;
            for r in &rows {
                println!(
                    "thresh {:.4}: return {:.3}, fast activation {:.4}",
                    r.thresh, r.return_mean, r.activation_rate
                );
            }
        }
        Command::Plot {
            csv,
            out,
            sweep,
            title,
        } => {
            if sweep {
                plot::plot_sweep(&csv, &out)?;
            } else {
                plot::plot_curve(&csv, &out, &title)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
