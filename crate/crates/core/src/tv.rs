//! Exact 1D total-variation denoising.
//!
//! `tv1d` returns the minimizer of `1/2 sum (y - x)^2 + lam sum |y[i+1] - y[i]|`
//! with the dynamic-programming method: a forward pass keeps the derivative of
//! the partial objective as a piecewise-linear function (a deque of knots) and
//! records, per position, the interval the next value clamps into; a backward
//! pass reads the solution off. Linear time in practice, no iterations.
//!
//! The anchored variant adds `lam |y[0] - a|`, i.e. the sequence continues a
//! value that is already fixed. [`SlidingTv`] uses it to denoise a stream with
//! bounded lookahead.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvParams {
    pub lam: f64,
}

impl TvParams {
    pub fn new(lam: f64) -> Result<Self> {
        check_lam(lam)?;
        Ok(Self { lam })
    }
}

fn check_lam(lam: f64) -> Result<()> {
    if !(lam >= 0.0 && lam.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "TV weight must be finite and >= 0, got {lam}"
        )));
    }
    Ok(())
}

pub fn tv1d(x: &[f64], lam: f64) -> Result<Vec<f64>> {
    check_lam(lam)?;
    Ok(solve(x, lam, None))
}

/// TV denoising of a continuation of a sequence whose last value is `anchor`.
pub fn tv1d_anchored(x: &[f64], lam: f64, anchor: f64) -> Result<Vec<f64>> {
    check_lam(lam)?;
    if !anchor.is_finite() {
        return Err(Error::InvalidParameter("anchor must be finite".into()));
    }
    Ok(solve(x, lam, Some(anchor)))
}

/// Total variation `sum |y[i+1] - y[i]|`.
pub fn total_variation(y: &[f64]) -> f64 {
    y.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Knot of the derivative: crossing `pos` from the left adds `da * y + db`.
#[derive(Debug, Clone, Copy)]
struct Knot {
    pos: f64,
    da: f64,
    db: f64,
}

fn solve(x: &[f64], lam: f64, anchor: Option<f64>) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    if lam == 0.0 {
        return x.to_vec();
    }

    let mut knots: VecDeque<Knot> = VecDeque::with_capacity(2 * n + 1);
    // derivative coefficients (slope, intercept) of the outermost pieces
    let (mut al, mut bl, mut ar, mut br) = (0.0, 0.0, 0.0, 0.0);
    if let Some(a) = anchor {
        knots.push_back(Knot {
            pos: a,
            da: 0.0,
            db: 2.0 * lam,
        });
        bl = -lam;
        br = lam;
    }
    let mut lo = vec![0.0; n - 1];
    let mut hi = vec![0.0; n - 1];

    for i in 0..n - 1 {
        al += 1.0;
        bl -= x[i];
        ar += 1.0;
        br -= x[i];

        // leftmost point where the derivative reaches -lam
        let (mut a, mut b, mut prev) = (al, bl, f64::NEG_INFINITY);
        let l = loop {
            let cand = (-lam - b) / a;
            match knots.front() {
                Some(k) if cand > k.pos => {
                    a += k.da;
                    b += k.db;
                    prev = k.pos;
                    knots.pop_front();
                }
                _ => break cand.max(prev),
            }
        };
        knots.push_front(Knot {
            pos: l,
            da: a,
            db: b + lam,
        });
        al = 0.0;
        bl = -lam;

        // rightmost point where the derivative reaches +lam
        let (mut a, mut b, mut next) = (ar, br, f64::INFINITY);
        let h = loop {
            if a <= 0.0 {
                // only the clipped left piece is left: the crossing is its jump
                break next;
            }
            let cand = (lam - b) / a;
            match knots.back() {
                Some(k) if cand < k.pos => {
                    a -= k.da;
                    b -= k.db;
                    next = k.pos;
                    knots.pop_back();
                }
                _ => break cand.min(next),
            }
        };
        knots.push_back(Knot {
            pos: h,
            da: -a,
            db: lam - b,
        });
        ar = 0.0;
        br = lam;

        lo[i] = l;
        hi[i] = h;
    }

    // zero of the final derivative
    let (mut a, mut b, mut prev) = (al + 1.0, bl - x[n - 1], f64::NEG_INFINITY);
    let last = loop {
        let cand = -b / a;
        match knots.front() {
            Some(k) if cand > k.pos => {
                a += k.da;
                b += k.db;
                prev = k.pos;
                knots.pop_front();
            }
            _ => break cand.max(prev),
        }
    };

    let mut y = vec![0.0; n];
    y[n - 1] = last;
    for i in (0..n - 1).rev() {
        y[i] = y[i + 1].max(lo[i]).min(hi[i]);
    }
    y
}

/// Streaming TV with `lookahead` frames of latency.
///
/// When frame `j + lookahead` arrives, frames `j ..= j + lookahead` are
/// denoised with the anchor set to the committed value of frame `j - 1`, and
/// frame `j` is committed. Committed values never change, and a static input
/// stretch stays exactly static once the committed value has settled.
#[derive(Debug, Clone)]
pub struct SlidingTv {
    lam: f64,
    lookahead: usize,
    raw: Vec<f64>,
    committed: Vec<f64>,
}

impl SlidingTv {
    pub fn new(lam: f64, lookahead: usize) -> Result<Self> {
        check_lam(lam)?;
        Ok(Self {
            lam,
            lookahead,
            raw: Vec::new(),
            committed: Vec::new(),
        })
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    pub fn committed(&self) -> &[f64] {
        &self.committed
    }

    /// Adds one frame and returns the number of newly committed values.
    pub fn push(&mut self, value: f64) -> usize {
        self.raw.push(value);
        let before = self.committed.len();
        while self.raw.len() > self.committed.len() + self.lookahead {
            let j = self.committed.len();
            let y = self.window(j, j + self.lookahead + 1);
            self.committed.push(y[0]);
        }
        self.committed.len() - before
    }

    /// Commits everything that is left with one truncated window.
    pub fn finish(&mut self) -> usize {
        let j = self.committed.len();
        if j == self.raw.len() {
            return 0;
        }
        let y = self.window(j, self.raw.len());
        self.committed.extend_from_slice(&y);
        y.len()
    }

    fn window(&self, start: usize, end: usize) -> Vec<f64> {
        let x = &self.raw[start..end];
        match start.checked_sub(1) {
            Some(p) => solve(x, self.lam, Some(self.committed[p])),
            None => solve(x, self.lam, None),
        }
    }

    /// Runs a whole sequence through a fresh instance.
    pub fn run(lam: f64, lookahead: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mut s = Self::new(lam, lookahead)?;
        for &v in x {
            s.push(v);
        }
        s.finish();
        Ok(s.committed)
    }
}
