//! Comparison filters: Savitzky-Golay, Kalman, bilateral, a local
//! MeshFlow-style smoother and a causal moving average.

pub mod bilateral;
pub mod kalman;
pub mod meshflow;
pub mod movavg;
pub mod sg;

pub use bilateral::{Bilateral, BilateralParams};
pub use kalman::{Kalman, KalmanParams};
pub use meshflow::{meshflow_window, Meshflow, MeshflowParams, ANCHOR_WEIGHT};
pub use movavg::{MovAvg, MovAvgParams};
pub use sg::{sg_coefficients, SavitzkyGolay, SgParams};

use crate::error::{Error, Result};

/// Input history for filters that emit frame `k` from the inputs in
/// `[k - half, k + half]`, truncated at both ends of the stream.
#[derive(Debug, Clone)]
struct Centered {
    half: usize,
    raw: Vec<f64>,
    /// Absolute frame index of `raw[0]`.
    base: usize,
    next: usize,
    finished: bool,
}

impl Centered {
    fn new(half: usize) -> Self {
        Self {
            half,
            raw: Vec::new(),
            base: 0,
            next: 0,
            finished: false,
        }
    }

    fn received(&self) -> usize {
        self.base + self.raw.len()
    }

    /// `f(window, c)` gets the window and the position of frame `k` in it.
    fn emit(&mut self, last: usize, mut f: impl FnMut(&[f64], usize) -> f64) -> f64 {
        let k = self.next;
        let lo = k.saturating_sub(self.half);
        let w = &self.raw[lo - self.base..=last - self.base];
        self.next += 1;
        f(w, k - lo)
    }

    fn push(&mut self, value: f64, mut f: impl FnMut(&[f64], usize) -> f64) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.raw.push(value);
        let mut out = Vec::new();
        while self.received() > self.next + self.half {
            let last = self.next + self.half;
            out.push(self.emit(last, &mut f));
        }
        let keep_from = self.next.saturating_sub(self.half);
        if keep_from > self.base + 4096 {
            self.raw.drain(..keep_from - self.base);
            self.base = keep_from;
        }
        Ok(out)
    }

    fn finish(&mut self, mut f: impl FnMut(&[f64], usize) -> f64) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.finished = true;
        let last = self.received() - 1;
        let mut out = Vec::new();
        while self.next <= last {
            out.push(self.emit(last, &mut f));
        }
        Ok(out)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
    }
    Ok(())
}
