//! Precision, smoothness and residual-motion metrics plus timing helpers.
//!
//! Both the literal sums and per-frame means are reported; comparisons use the
//! means. Slopes are forward first differences.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{FilterSession, Sample};

/// Minimum length of a ground-truth hold counted by [`residual_motion`].
pub const MIN_STATIC: usize = 128;

fn same_len(y: &[f64], gt: &[f64]) -> Result<()> {
    if y.len() != gt.len() {
        return Err(Error::LengthMismatch {
            what: "prediction vs ground truth",
            left: y.len(),
            right: gt.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    Ok(())
}

/// Sum and mean of squared position errors.
pub fn precision(y: &[f64], gt: &[f64]) -> Result<(f64, f64)> {
    same_len(y, gt)?;
    let sum: f64 = y.iter().zip(gt).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum, sum / y.len() as f64))
}

/// Sum and mean (over `n - 1` slopes) of absolute slope errors.
pub fn smoothness(y: &[f64], gt: &[f64]) -> Result<(f64, f64)> {
    same_len(y, gt)?;
    if y.len() < 2 {
        return Err(Error::InputTooShort { len: y.len(), min: 2 });
    }
    let sum: f64 = y
        .windows(2)
        .zip(gt.windows(2))
        .map(|(a, b)| ((a[1] - a[0]) - (b[1] - b[0])).abs())
        .sum();
    Ok((sum, sum / (y.len() - 1) as f64))
}

/// Maximal frame ranges `[start, end)` over which `gt` holds still (every
/// first difference within `tol`) for at least `min_static` frames.
pub fn static_runs(gt: &[f64], min_static: usize, tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for t in 1..=gt.len() {
        let still = t < gt.len() && (gt[t] - gt[t - 1]).abs() <= tol;
        if !still {
            if t - start >= min_static.max(2) {
                runs.push(start..t);
            }
            start = t;
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualMotion {
    /// Mean absolute output slope over the qualifying holds (0 when none).
    pub value: f64,
    /// Number of slopes averaged; 0 flags that no hold qualified.
    pub slopes: usize,
    pub runs: usize,
}

impl ResidualMotion {
    pub fn is_empty(&self) -> bool {
        self.slopes == 0
    }
}

pub fn residual_motion(y: &[f64], gt: &[f64], min_static: usize, tol: f64) -> Result<ResidualMotion> {
    same_len(y, gt)?;
    let runs = static_runs(gt, min_static, tol);
    let mut sum = 0.0;
    let mut slopes = 0;
    for r in &runs {
        for t in r.start..r.end - 1 {
            sum += ((y[t + 1] - y[t]) - (gt[t + 1] - gt[t])).abs();
            slopes += 1;
        }
    }
    Ok(ResidualMotion {
        value: if slopes > 0 { sum / slopes as f64 } else { 0.0 },
        slopes,
        runs: runs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision_sum: f64,
    pub precision_mean: f64,
    pub smoothness_sum: f64,
    pub smoothness_mean: f64,
    pub residual_motion: f64,
    /// Slopes that entered `residual_motion`; 0 means no qualifying hold.
    pub residual_slopes: usize,
    pub fps: f64,
    pub latency_frames: usize,
    pub n_frames: usize,
}

/// Accuracy metrics of `y` against `gt`. Timing fields are left at 0 for the
/// caller to fill in.
pub fn evaluate(y: &[f64], gt: &[f64]) -> Result<EvalReport> {
    let (precision_sum, precision_mean) = precision(y, gt)?;
    let (smoothness_sum, smoothness_mean) = smoothness(y, gt)?;
    let rm = residual_motion(y, gt, MIN_STATIC, 0.0)?;
    Ok(EvalReport {
        precision_sum,
        precision_mean,
        smoothness_sum,
        smoothness_mean,
        residual_motion: rm.value,
        residual_slopes: rm.slopes,
        fps: 0.0,
        latency_frames: 0,
        n_frames: y.len(),
    })
}

/// Streaming throughput in frames per second: one untimed warm-up run, then
/// the median over `reps` (at least 10) timed runs of fresh sessions.
pub fn measure_fps<F>(make: F, x: &[f64], reps: usize) -> Result<f64>
where
    F: Fn() -> Result<FilterSession>,
{
    if x.is_empty() {
        return Err(Error::Empty("benchmark stream"));
    }
    make()?.run(x)?;
    let mut rates = Vec::with_capacity(reps.max(10));
    for _ in 0..reps.max(10) {
        let session = make()?;
        let t0 = Instant::now();
        let out = session.run(x)?;
        let dt = t0.elapsed().as_secs_f64();
        std::hint::black_box(out);
        rates.push(x.len() as f64 / dt.max(1e-12));
    }
    rates.sort_by(f64::total_cmp);
    let mid = rates.len() / 2;
    Ok(if rates.len() % 2 == 1 {
        rates[mid]
    } else {
        0.5 * (rates[mid - 1] + rates[mid])
    })
}

/// Largest observed gap between the push of frame `k` and the push at which
/// its output was emitted. Frames flushed by `finalize` are not counted.
pub fn measure_latency(mut session: FilterSession, x: &[f64]) -> Result<usize> {
    let mut worst = 0;
    for (frame, &value) in x.iter().enumerate() {
        for s in session.push(Sample::new(frame, value))? {
            worst = worst.max(frame - s.frame);
        }
    }
    session.finalize()?;
    Ok(worst)
}

/// Checks that changing the input after frame `k + latency` leaves the outputs
/// of frames `0..=k` bit-identical, for every `k` in `probes`.
pub fn causality_probe<F>(make: F, x: &[f64], probes: &[usize], delta: f64) -> Result<bool>
where
    F: Fn() -> Result<FilterSession>,
{
    let base = make()?;
    let latency = base.latency();
    let reference = base.run(x)?;
    for &k in probes {
        let j = k + latency + 1;
        if j >= x.len() {
            continue;
        }
        let mut xp = x.to_vec();
        for v in &mut xp[j..] {
            *v += delta;
        }
        let out = make()?.run(&xp)?;
        if out[..=k]
            .iter()
            .zip(&reference[..=k])
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_offset_precision() {
        let gt: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let y: Vec<f64> = gt.iter().map(|v| v + 1.0).collect();
        let (s, m) = precision(&y, &gt).unwrap();
        assert!((s - 100.0).abs() < 1e-9 && (m - 1.0).abs() < 1e-12);
        assert!(smoothness(&y, &gt).unwrap().0 < 1e-12);
    }

    #[test]
    fn static_output_against_moving_truth() {
        let gt: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let y = vec![0.0; 11];
        assert_eq!(smoothness(&y, &gt).unwrap().0, 10.0);
    }

    #[test]
    fn hold_threshold() {
        let mut gt = vec![2.0; 127];
        gt.extend((1..50).map(|i| 2.0 + i as f64));
        let y = gt.clone();
        assert!(residual_motion(&y, &gt, 128, 0.0).unwrap().is_empty());
        let gt = vec![2.0; 128];
        let y: Vec<f64> = (0..128).map(|i| 0.001 * i as f64).collect();
        let rm = residual_motion(&y, &gt, 128, 0.0).unwrap();
        assert_eq!((rm.runs, rm.slopes), (1, 127));
        assert!((rm.value - 0.001).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            precision(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { left: 2, right: 1, .. })
        ));
    }
}
