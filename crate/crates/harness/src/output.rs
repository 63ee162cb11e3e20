//! CSV artifacts. Column layouts are documented in the README.

use std::path::Path;

use tla_core::td3::{CurvePoint, LearningCurve};
use tla_core::tla::TlaEpisode;

use crate::error::{HarnessError, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    let file = std::fs::File::create(path).map_err(HarnessError::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn nums(xs: &[f64]) -> impl Iterator<Item = String> + '_ {
    xs.iter().map(f64::to_string)
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// `step,eval_return_mean,eval_return_std`.
pub fn write_curve(path: &Path, curve: &LearningCurve) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "eval_return_mean", "eval_return_std"])?;
    for p in &curve.points {
        w.write_record([p.step.to_string(), p.mean.to_string(), p.std.to_string()])?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Reads any CSV whose first three columns are step, mean and std.
pub fn read_curve(path: &Path) -> Result<LearningCurve> {
    let file = std::fs::File::open(path).map_err(HarnessError::io(path))?;
    let mut r = csv::Reader::from_reader(file);
    let mut curve = LearningCurve::default();
    for row in r.records() {
        let row = row?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| HarnessError::config(format!("{}: bad row {row:?}", path.display())))
        };
        curve.points.push(CurvePoint {
            step: field(0)? as u64,
            mean: field(1)?,
            std: field(2)?,
        });
    }
    Ok(curve)
}

/// Per-step mean and population std of the per-seed mean returns:
/// `step,eval_return_mean,eval_return_std,seeds`.
pub fn aggregate_curves(curves: &[&LearningCurve]) -> Result<LearningCurve> {
    let Some(first) = curves.first() else {
        return Ok(LearningCurve::default());
    };
    let mut out = LearningCurve::default();
    for (i, p) in first.points.iter().enumerate() {
        let mut vals = Vec::with_capacity(curves.len());
        for c in curves {
            match c.points.get(i) {
                Some(q) if q.step == p.step => vals.push(q.mean),
                _ => return Err(HarnessError::config("seed curves have different steps")),
            }
        }
        let (mean, std) = tla_core::metrics::mean_std(&vals);
        out.points.push(CurvePoint {
            step: p.step,
            mean,
            std,
        });
    }
    Ok(out)
}

pub fn write_aggregate_curve(path: &Path, curve: &LearningCurve, seeds: usize) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["step", "eval_return_mean", "eval_return_std", "seeds"])?;
    for p in &curve.points {
        w.write_record([
            p.step.to_string(),
            p.mean.to_string(),
            p.std.to_string(),
            seeds.to_string(),
        ])?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// One evaluation episode: `t,s0..,a0..,reward,terminated,truncated`, or with
/// `chosen` given, `t,s0..,chosen0..,applied0..,reward,terminated,truncated`.
pub fn write_trajectory(path: &Path, ep: &TlaEpisode, chosen: Option<&[Vec<f64>]>) -> Result<()> {
    let steps = &ep.record.steps;
    let sd = steps.first().map_or(0, |s| s.state.len());
    let ad = steps.first().map_or(0, |s| s.action.len());
    let mut w = writer(path)?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(indexed("s", sd));
    if chosen.is_some() {
        header.extend(indexed("chosen", ad));
        header.extend(indexed("applied", ad));
    } else {
        header.extend(indexed("a", ad));
    }
    header.extend(["reward", "terminated", "truncated"].map(String::from));
    w.write_record(&header)?;
    for (t, s) in steps.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(nums(&s.state));
        if let Some(c) = chosen {
            row.extend(nums(&c[t]));
        }
        row.extend(nums(&s.action));
        row.push(s.reward.to_string());
        row.push((s.terminated as u8).to_string());
        row.push((s.truncated as u8).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Every step of a layered episode:
/// `t,state0..,a_slow0..,a_fast0..,suppressed`. Rows with `suppressed = 0`
/// are the states where the fast layer changed the executed action.
pub fn write_activations(path: &Path, ep: &TlaEpisode) -> Result<()> {
    let sd = ep.record.steps.first().map_or(0, |s| s.state.len());
    let ad = ep.actions.first().map_or(0, |a| a.slow.len());
    let mut w = writer(path)?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(indexed("state", sd));
    header.extend(indexed("a_slow", ad));
    header.extend(indexed("a_fast", ad));
    header.push("suppressed".into());
    w.write_record(&header)?;
    for (t, (s, a)) in ep.record.steps.iter().zip(&ep.actions).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(nums(&s.state));
        row.extend(nums(&a.slow));
        row.extend(nums(&a.fast));
        row.push((a.fast_suppressed as u8).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Generic table writer for metrics and sweep results.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(HarnessError::io(path))?;
    Ok(())
}

/// Header plus rows of a CSV file, as strings.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = std::fs::File::open(path).map_err(HarnessError::io(path))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|row| row.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}
