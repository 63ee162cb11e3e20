//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key has a default, so an
//! empty file is a valid TD3-on-pendulum configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tla_core::envs::EnvId;
use tla_core::td3::Td3Config;
use tla_core::tla::{ThresholdMode, TlaConfig, WindowDiscount};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Td3,
    TlaC,
    TlaO,
    Td3Delayed,
    TlaRealtime,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Td3,
        Algorithm::TlaC,
        Algorithm::TlaO,
        Algorithm::Td3Delayed,
        Algorithm::TlaRealtime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Td3 => "td3",
            Algorithm::TlaC => "tla_c",
            Algorithm::TlaO => "tla_o",
            Algorithm::Td3Delayed => "td3_delayed",
            Algorithm::TlaRealtime => "tla_realtime",
        }
    }

    pub fn is_layered(self) -> bool {
        matches!(
            self,
            Algorithm::TlaC | Algorithm::TlaO | Algorithm::TlaRealtime
        )
    }

    /// The same learner under one step of actuation delay.
    pub fn delayed(self) -> Result<Self> {
        match self {
            Algorithm::Td3 | Algorithm::Td3Delayed => Ok(Algorithm::Td3Delayed),
            Algorithm::TlaC | Algorithm::TlaRealtime => Ok(Algorithm::TlaRealtime),
            Algorithm::TlaO => Err(HarnessError::config(
                "the open-loop controller has no real-time mode",
            )),
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| HarnessError::config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub env: EnvId,
    pub seeds: Vec<u64>,
    /// Base-rate environment steps of the main training phase.
    pub total_steps: u64,
    /// Steps of the pre-trained layer, counted at that layer's own period
    /// (slow decisions for the closed-loop variants, base steps for the
    /// open-loop one). `None` picks `total_steps / n` or `total_steps`.
    pub pretrain_steps: Option<u64>,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub n: usize,
    /// Evaluation threshold on the fast action, in action units.
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    /// Fast-action penalty; `None` uses the environment default.
    pub lambda: Option<f64>,
    pub penalty: bool,
    pub augment: bool,
    pub window_discount: WindowDiscount,
    pub td3: Td3Config,
    pub output_dir: PathBuf,
    /// Seeds trained concurrently; results never depend on it.
    pub workers: usize,
    pub checkpoints: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Td3,
            env: EnvId::Pendulum,
            seeds: vec![0],
            total_steps: 30_000,
            pretrain_steps: None,
            eval_every: 1_000,
            eval_episodes: 10,
            n: 4,
            threshold: 0.0,
            threshold_mode: ThresholdMode::Joint,
            lambda: None,
            penalty: true,
            augment: true,
            window_discount: WindowDiscount::Compounded,
            td3: Td3Config::default(),
            output_dir: PathBuf::from("runs/default"),
            workers: 1,
            checkpoints: true,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HarnessError::config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(HarnessError::config(format!(
            "bad value `{value}` for `{key}` (expected true or false)"
        ))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let with_line = |e: HarnessError| match e {
                HarnessError::Config { message, .. } => HarnessError::Config {
                    line: Some(i + 1),
                    message,
                },
                other => other,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("expected key = value, got `{line}`")))
                .map_err(with_line)?;
            cfg.set(k.trim(), v.trim()).map_err(with_line)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_text(&text)
    }

    /// Applies one setting; used for file lines and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.td3;
        match key {
            "algorithm" | "algo" => self.algorithm = parse(key, value)?,
            "env" => {
                self.env = value
                    .parse()
                    .map_err(|_| HarnessError::config(format!("unknown env `{value}`")))?
            }
            "seeds" => self.seeds = parse_list(key, value)?,
            "total_steps" => self.total_steps = parse(key, value)?,
            "pretrain_steps" => {
                self.pretrain_steps = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "eval_every" => self.eval_every = parse(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "threshold_mode" => {
                self.threshold_mode = match value {
                    "joint" => ThresholdMode::Joint,
                    "per_dimension" => ThresholdMode::PerDimension,
                    _ => return Err(HarnessError::config(format!("bad threshold_mode `{value}`"))),
                }
            }
            "lambda" => {
                self.lambda = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "penalty" => self.penalty = parse_bool(key, value)?,
            "augment" => self.augment = parse_bool(key, value)?,
            "window_discount" => {
                self.window_discount = match value {
                    "compounded" => WindowDiscount::Compounded,
                    "single" => WindowDiscount::Single,
                    _ => return Err(HarnessError::config(format!("bad window_discount `{value}`"))),
                }
            }
            "realtime" => {
                if parse_bool(key, value)? {
                    self.algorithm = self.algorithm.delayed()?;
                }
            }
            "hidden" => t.hidden = parse_list(key, value)?,
            "learning_rate" => t.adam.learning_rate = parse(key, value)?,
            "gamma" => t.gamma = parse(key, value)?,
            "tau" => t.tau = parse(key, value)?,
            "policy_noise" => t.policy_noise = parse(key, value)?,
            "noise_clip" => t.noise_clip = parse(key, value)?,
            "policy_delay" => t.policy_delay = parse(key, value)?,
            "exploration_noise" => t.exploration_noise = parse(key, value)?,
            "warmup_steps" => t.warmup_steps = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "buffer_capacity" => t.buffer_capacity = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "workers" => self.workers = parse(key, value)?,
            "checkpoints" => self.checkpoints = parse_bool(key, value)?,
            _ => return Err(HarnessError::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every setting, one per line, in a form `from_text` reads back.
    pub fn to_text(&self) -> String {
        let t = &self.td3;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("algorithm", self.algorithm.as_str().into());
        put("env", self.env.as_str().into());
        put("seeds", join(&self.seeds));
        put("total_steps", self.total_steps.to_string());
        put(
            "pretrain_steps",
            self.pretrain_steps.map_or("auto".into(), |v| v.to_string()),
        );
        put("eval_every", self.eval_every.to_string());
        put("eval_episodes", self.eval_episodes.to_string());
        put("n", self.n.to_string());
        put("threshold", self.threshold.to_string());
        put(
            "threshold_mode",
            match self.threshold_mode {
                ThresholdMode::Joint => "joint",
                ThresholdMode::PerDimension => "per_dimension",
            }
            .into(),
        );
        put("lambda", self.lambda.map_or("auto".into(), |v| v.to_string()));
        put("penalty", self.penalty.to_string());
        put("augment", self.augment.to_string());
        put(
            "window_discount",
            match self.window_discount {
                WindowDiscount::Compounded => "compounded",
                WindowDiscount::Single => "single",
            }
            .into(),
        );
        put("hidden", join(&t.hidden));
        put("learning_rate", t.adam.learning_rate.to_string());
        put("gamma", t.gamma.to_string());
        put("tau", t.tau.to_string());
        put("policy_noise", t.policy_noise.to_string());
        put("noise_clip", t.noise_clip.to_string());
        put("policy_delay", t.policy_delay.to_string());
        put("exploration_noise", t.exploration_noise.to_string());
        put("warmup_steps", t.warmup_steps.to_string());
        put("batch_size", t.batch_size.to_string());
        put("buffer_capacity", t.buffer_capacity.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("workers", self.workers.to_string());
        put("checkpoints", self.checkpoints.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds must not be empty"));
        }
        if self.total_steps < self.td3.warmup_steps {
            return Err(HarnessError::config(format!(
                "total_steps ({}) is below warmup_steps ({})",
                self.total_steps, self.td3.warmup_steps
            )));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.workers == 0 {
            return Err(HarnessError::config(
                "eval_every, eval_episodes and workers must be positive",
            ));
        }
        self.td3.validate()?;
        if self.algorithm.is_layered() {
            self.tla().validate(self.env.make().spec())?;
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| self.env.default_fast_penalty())
    }

    pub fn tla(&self) -> TlaConfig {
        let mut c = match self.algorithm {
            Algorithm::TlaO => TlaConfig::open_loop(self.n),
            _ => TlaConfig::closed_loop(self.n, self.lambda()),
        };
        c.threshold = self.threshold;
        c.threshold_mode = self.threshold_mode;
        c.augmentation_enabled = self.augment;
        c.window_discount = self.window_discount;
        if self.algorithm != Algorithm::TlaO {
            c.penalty_enabled = self.penalty;
        }
        c
    }

    /// Steps of the pre-trained layer at its own period.
    pub fn pretrain_steps(&self) -> u64 {
        self.pretrain_steps.unwrap_or(match self.algorithm {
            Algorithm::TlaO => self.total_steps,
            _ => self.total_steps / self.n as u64,
        })
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.output_dir.join(format!("seed_{seed}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.algorithm = Algorithm::TlaO;
        cfg.env = EnvId::MountainCar;
        cfg.seeds = vec![3, 1, 4];
        cfg.lambda = Some(0.25);
        cfg.td3.hidden = vec![64, 32];
        cfg.threshold = 0.1 + 0.2;
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ExperimentConfig::from_text("# run\n\nenv = cartpole # inline\nseeds = 1, 2\n").unwrap();
        assert_eq!(cfg.env, EnvId::CartPole);
        assert_eq!(cfg.seeds, vec![1, 2]);
    }

    #[test]
    fn errors_name_the_line() {
        let err = ExperimentConfig::from_text("env = pendulum\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::from_text("gamma = abc").is_err());
        assert!(ExperimentConfig::from_text("just words").is_err());
    }

    #[test]
    fn realtime_flag_switches_algorithm() {
        let cfg = ExperimentConfig::from_text("algorithm = tla_c\nrealtime = true").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::TlaRealtime);
        let cfg = ExperimentConfig::from_text("realtime = true").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Td3Delayed);
        assert!(ExperimentConfig::from_text("algorithm = tla_o\nrealtime = true").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.total_steps = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.algorithm = Algorithm::TlaC;
        cfg.n = 1;
        assert!(cfg.validate().is_err());
    }
}
