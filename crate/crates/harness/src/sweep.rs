//! Evaluation of a trained closed-loop pair over a range of thresholds.

use std::path::Path;

use tla_core::nn::Mlp;
use tla_core::td3::eval_seeds;
use tla_core::tla::{eval_tla_c, TlaConfig};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output;
use crate::plot;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Threshold in action units.
    pub thresh: f64,
    /// The same threshold as a fraction of the largest action half-width.
    pub thresh_frac: f64,
    pub return_mean: f64,
    pub return_std: f64,
    /// Fraction of evaluated steps on which the fast action was kept.
    pub activation_rate: f64,
    /// Kept fast actions per episode.
    pub activations_mean: f64,
    pub repetition_pct: f64,
}

/// Parses `start:step:end` (inclusive, up to rounding) or a comma list.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || HarnessError::config(format!("bad threshold range `{spec}`"));
    let nums = |s: &str| -> Result<Vec<f64>> {
        s.split([':', ','])
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    let out = if spec.contains(':') {
        let v = nums(spec)?;
        let [start, step, end] = v[..] else {
            return Err(bad());
        };
        if !(step > 0.0 && end >= start) {
            return Err(bad());
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        nums(spec)?
    };
    if out.is_empty() || out.windows(2).any(|w| w[1] <= w[0]) || out[0] < 0.0 {
        return Err(bad());
    }
    Ok(out)
}

/// Evaluates the pair at each threshold, given as fractions of the largest
/// action half-width. Every threshold uses the same evaluation seeds.
pub fn threshold_sweep(
    cfg: &ExperimentConfig,
    seed: u64,
    slow: &Mlp,
    fast: &Mlp,
    fractions: &[f64],
) -> Result<Vec<SweepRow>> {
    let mut env = cfg.env.make();
    let max = env.spec().max_action().into_iter().fold(0.0, f64::max);
    let seeds = eval_seeds(seed, cfg.eval_episodes);
    let tla: TlaConfig = cfg.tla();
    fractions
        .iter()
        .map(|&frac| {
            let thresh = frac * max;
            let e = eval_tla_c(&mut env, slow, fast, &tla, thresh, &seeds)?;
            Ok(SweepRow {
                thresh,
                thresh_frac: frac,
                return_mean: e.stats.mean,
                return_std: e.stats.std,
                activation_rate: e.activation_rate(),
                activations_mean: e.activations_mean(),
                repetition_pct: e.repetition_pct(),
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 7] = [
    "thresh",
    "thresh_frac",
    "return_mean",
    "return_std",
    "activation_rate",
    "activations_mean",
    "repetition_pct",
];

/// Writes `sweep.csv` and, drawn from it, `sweep.svg` into `dir`.
pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [
                r.thresh,
                r.thresh_frac,
                r.return_mean,
                r.return_std,
                r.activation_rate,
                r.activations_mean,
                r.repetition_pct,
            ]
            .iter()
            .map(f64::to_string)
            .collect()
        })
        .collect();
    let csv = dir.join("sweep.csv");
    output::write_table(&csv, &SWEEP_HEADER, &table)?;
    plot::plot_sweep(&csv, &dir.join("sweep.svg"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = parse_range("0:0.05:1.0").unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(r[0], 0.0);
        assert!((r[20] - 1.0).abs() < 1e-12);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(parse_range("0.1, 0.3").unwrap(), vec![0.1, 0.3]);
        assert!(parse_range("0:0:1").is_err());
        assert!(parse_range("0.3,0.1").is_err());
        assert!(parse_range("a:b:c").is_err());
    }
}
