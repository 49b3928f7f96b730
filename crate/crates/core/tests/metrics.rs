use cinefilter::metrics::*;
use cinefilter::trajectory::{FilterKind, FilterSession, StreamFilter};
use cinefilter::Error;
use proptest::prelude::*;

#[test]
fn precision_and_smoothness_by_hand() {
    let gt = [0.0, 1.0, 2.0, 3.0];
    let y = [0.5, 1.0, 1.0, 4.0];
    // errors 0.5, 0, -1, 1
    let (ps, pm) = precision(&y, &gt).unwrap();
    assert_eq!(ps, 0.25 + 0.0 + 1.0 + 1.0);
    assert_eq!(pm, 2.25 / 4.0);
    // slopes 0.5, 0, 3 vs 1, 1, 1
    let (ss, sm) = smoothness(&y, &gt).unwrap();
    assert_eq!(ss, 0.5 + 1.0 + 2.0);
    assert_eq!(sm, 3.5 / 3.0);
}

#[test]
fn static_runs_by_hand() {
    let mut gt = vec![0.0; 10];
    gt.extend((1..=5).map(|i| i as f64));
    gt.extend(vec![5.0; 4]);
    // holds: [0, 10) before the ramp, [14, 19) from its last value on
    assert_eq!(static_runs(&gt, 3, 0.0), vec![0..10, 14..19]);
    assert_eq!(static_runs(&gt, 6, 0.0), vec![0..10]);
    assert_eq!(static_runs(&gt, 3, 1.0), vec![0..19]);
    assert!(static_runs(&[1.0], 1, 0.0).is_empty());
}

#[test]
fn residual_motion_by_hand() {
    let gt = [vec![2.0; 6], vec![3.0, 4.0]].concat();
    let mut y = gt.clone();
    y[2] += 0.3;
    // hold [0, 6): output slopes 0, 0.3, -0.3, 0, 0
    let r = residual_motion(&y, &gt, 4, 0.0).unwrap();
    assert_eq!((r.runs, r.slopes), (1, 5));
    assert!((r.value - 0.6 / 5.0).abs() < 1e-15);
    let none = residual_motion(&y, &gt, 10, 0.0).unwrap();
    assert!(none.is_empty() && none.value == 0.0);
}

#[test]
fn evaluate_uses_the_long_hold_threshold() {
    let gt = vec![1.0; MIN_STATIC];
    let y: Vec<f64> = (0..MIN_STATIC).map(|i| 1.0 + (i % 2) as f64 * 0.1).collect();
    let r = evaluate(&y, &gt).unwrap();
    assert_eq!(r.residual_slopes, MIN_STATIC - 1);
    assert!((r.residual_motion - 0.1).abs() < 1e-12);
    let r = evaluate(&y[1..], &gt[1..]).unwrap();
    assert_eq!(r.residual_slopes, 0);
}

#[test]
fn bad_inputs() {
    assert!(matches!(precision(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
    assert!(precision(&[], &[]).is_err());
    assert!(matches!(smoothness(&[1.0], &[1.0]), Err(Error::InputTooShort { .. })));
}

/// Emits frame `k` unchanged once frame `k + lag` arrives. With `understate`
/// it reports one frame less latency than it has.
struct Lagged {
    lag: usize,
    buf: Vec<f64>,
    next: usize,
    understate: bool,
}

impl StreamFilter for Lagged {
    fn kind(&self) -> FilterKind {
        FilterKind::MovAvg
    }

    fn push(&mut self, v: f64) -> cinefilter::Result<Vec<f64>> {
        self.buf.push(v);
        let mut out = Vec::new();
        while self.next + self.lag < self.buf.len() {
            // the newest frame leaks into every output
            out.push(self.buf[self.next] + 1e-3 * self.buf.last().unwrap());
            self.next += 1;
        }
        Ok(out)
    }

    fn finish(&mut self) -> cinefilter::Result<Vec<f64>> {
        let last = *self.buf.last().unwrap_or(&0.0);
        let out = self.buf[self.next..].iter().map(|v| v + 1e-3 * last).collect();
        self.next = self.buf.len();
        Ok(out)
    }

    fn latency(&self) -> usize {
        if self.understate {
            self.lag - 1
        } else {
            self.lag
        }
    }
}

fn lagged(lag: usize, understate: bool) -> FilterSession {
    FilterSession::new(Box::new(Lagged {
        lag,
        buf: Vec::new(),
        next: 0,
        understate,
    }))
}

#[test]
fn latency_and_causality_probes_detect_what_they_should() {
    let x: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
    for lag in [0, 3, 16] {
        assert_eq!(measure_latency(lagged(lag, false), &x).unwrap(), lag);
        assert!(causality_probe(|| Ok(lagged(lag, false)), &x, &[0, 10, 50], 1.0).unwrap());
    }
    // frame 10 is emitted on frame 12 and sees it, so a claimed latency of 1 is caught
    assert!(!causality_probe(|| Ok(lagged(2, true)), &x, &[10], 1.0).unwrap());
}

#[test]
fn fps_is_positive_and_finite() {
    let x = vec![0.0; 1000];
    let fps = measure_fps(|| Ok(lagged(1, false)), &x, 10).unwrap();
    assert!(fps.is_finite() && fps > 0.0);
    assert!(measure_fps(|| Ok(lagged(1, false)), &[], 10).is_err());
}

proptest! {
    #[test]
    fn metrics_of_truth_are_zero(gt in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let r = evaluate(&gt, &gt).unwrap();
        prop_assert_eq!(r.precision_sum, 0.0);
        prop_assert_eq!(r.smoothness_sum, 0.0);
        prop_assert_eq!(r.residual_motion, 0.0);
    }

    #[test]
    fn smoothness_ignores_constant_offsets(
        gt in prop::collection::vec(-10f64..10.0, 2..100),
        noise in prop::collection::vec(-1f64..1.0, 100),
        c in -100f64..100.0,
    ) {
        let y: Vec<f64> = gt.iter().zip(&noise).map(|(g, e)| g + e).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let (a, _) = smoothness(&y, &gt).unwrap();
        let (b, _) = smoothness(&shifted, &gt).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
        let (p0, _) = precision(&y, &gt).unwrap();
        let (p1, _) = precision(&shifted, &gt).unwrap();
        let n = y.len() as f64;
        let mean: f64 = y.iter().zip(&gt).map(|(a, b)| a - b).sum::<f64>() / n;
        // ||e + c||^2 = ||e||^2 + 2 c sum(e) + n c^2
        prop_assert!((p1 - (p0 + 2.0 * c * mean * n + n * c * c)).abs() < 1e-6 * (1.0 + p1));
    }
}
