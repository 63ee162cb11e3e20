//! Evaluation metrics: normalised learning-curve area, action repetition and
//! decision counts.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Mean and population standard deviation; `(0, 0)` for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Area under a learning curve after mapping returns affinely from
/// `bounds = (min_return, max_return)` onto `[0, 1]` (clamped), divided by
/// the step span. Trapezoidal rule over the given `(step, return)` points,
/// which must be sorted by step. A single point yields its normalised value.
pub fn normalized_auc(curve: &[(f64, f64)], bounds: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bounds;
    if !(hi > lo) {
        return Err(Error::InvalidConfig("normalisation bounds need max > min".into()));
    }
    let norm = |r: f64| ((r - lo) / (hi - lo)).clamp(0.0, 1.0);
    match curve {
        [] => Err(Error::EmptyCurve),
        [(_, r)] => Ok(norm(*r)),
        _ => {
            let span = curve[curve.len() - 1].0 - curve[0].0;
            if !(span > 0.0) {
                return Err(Error::InvalidConfig("curve steps must increase".into()));
            }
            let area: f64 = curve
                .windows(2)
                .map(|w| 0.5 * (w[1].0 - w[0].0) * (norm(w[0].1) + norm(w[1].1)))
                .sum();
            Ok((area / span).clamp(0.0, 1.0))
        }
    }
}

/// Percentage of steps `t > 0` whose action is bit-identical to the
/// action at `t − 1`.
pub fn action_repetition<A: AsRef<[f64]>>(trace: &[A]) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: 2,
        });
    }
    let repeats = trace
        .windows(2)
        .filter(|w| bit_equal(w[0].as_ref(), w[1].as_ref()))
        .count();
    Ok(100.0 * repeats as f64 / (trace.len() - 1) as f64)
}

fn bit_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Which networks ran a forward pass on one base step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComputeStep {
    pub slow_pass: bool,
    pub fast_pass: bool,
}

/// Base steps on which at least one forward pass ran.
pub fn count_decisions(trace: &[ComputeStep]) -> usize {
    trace.iter().filter(|c| c.slow_pass || c.fast_pass).count()
}

/// Total forward passes over both layers.
pub fn count_forward_passes(trace: &[ComputeStep]) -> usize {
    trace
        .iter()
        .map(|c| c.slow_pass as usize + c.fast_pass as usize)
        .sum()
}

/// Decisions averaged over episodes.
pub fn mean_decisions(episodes: &[Vec<ComputeStep>]) -> f64 {
    let counts: Vec<f64> = episodes.iter().map(|e| count_decisions(e) as f64).collect();
    mean_std(&counts).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn auc_extremes_and_triangle() {
        let b = (-1600.0, 0.0);
        let at = |r: f64| vec![(0.0, r), (500.0, r), (1000.0, r)];
        assert_eq!(normalized_auc(&at(0.0), b).unwrap(), 1.0);
        assert_eq!(normalized_auc(&at(-1600.0), b).unwrap(), 0.0);
        let ramp = [(0.0, -1600.0), (1000.0, 0.0)];
        assert_eq!(normalized_auc(&ramp, b).unwrap(), 0.5);
        assert_eq!(normalized_auc(&[], b), Err(Error::EmptyCurve));
        assert_eq!(normalized_auc(&[(3.0, -400.0)], b).unwrap(), 0.75);
    }

    #[test]
    fn repetition_extremes() {
        let constant = vec![[0.3]; 10];
        assert_eq!(action_repetition(&constant).unwrap(), 100.0);
        let distinct: Vec<[f64; 1]> = (0..10).map(|i| [i as f64]).collect();
        assert_eq!(action_repetition(&distinct).unwrap(), 0.0);
        assert!(action_repetition(&[[1.0]]).is_err());
        // +0.0 and -0.0 differ bitwise.
        assert_eq!(action_repetition(&[[0.0], [-0.0]]).unwrap(), 0.0);
    }

    #[test]
    fn decision_counting() {
        let open = |slow: bool, fast: bool| ComputeStep {
            slow_pass: slow,
            fast_pass: fast,
        };
        // n = 4, 200 steps: gate always open → one slow pass per window.
        let gated: Vec<ComputeStep> = (0..200).map(|t| open(t % 4 == 0, false)).collect();
        assert_eq!(count_decisions(&gated), 50);
        assert_eq!(count_forward_passes(&gated), 50);
        // Gate always closed → the fast layer runs every step as well.
        let deferred: Vec<ComputeStep> = (0..200).map(|t| open(t % 4 == 0, true)).collect();
        assert_eq!(count_decisions(&deferred), 200);
        assert_eq!(count_forward_passes(&deferred), 250);
        assert_eq!(mean_decisions(&[gated, deferred]), 125.0);
    }
}
