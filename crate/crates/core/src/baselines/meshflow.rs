use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::positive;
use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshflowParams {
    pub window: usize,
    /// Weight on the squared first differences.
    pub w: f64,
}

impl Default for MeshflowParams {
    fn default() -> Self {
        Self { window: 20, w: 10.0 }
    }
}

impl MeshflowParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "meshflow window must be >= 2, got {}",
                self.window
            )));
        }
        if self.w != 0.0 {
            positive("meshflow w", self.w)?;
        }
        Ok(())
    }
}

/// Weight pulling already-emitted frames toward their emitted values.
pub const ANCHOR_WEIGHT: f64 = 1.0;

/// Minimizes `sum (y - x)^2 + w sum (y[i+1] - y[i])^2
/// + ANCHOR_WEIGHT sum_{anchored} (y - a)^2` with a tridiagonal solve.
pub fn meshflow_window(x: &[f64], anchors: &[Option<f64>], w: f64) -> Vec<f64> {
    let n = x.len();
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let links = usize::from(i > 0) + usize::from(i + 1 < n);
        diag[i] = 1.0 + w * links as f64;
        rhs[i] = x[i];
        if let Some(a) = anchors[i] {
            diag[i] += ANCHOR_WEIGHT;
            rhs[i] += ANCHOR_WEIGHT * a;
        }
    }
    // Thomas algorithm; off-diagonals are all -w and the matrix is
    // diagonally dominant
    let mut c = vec![0.0; n];
    for i in 0..n {
        let prev_c = if i > 0 { c[i - 1] } else { 0.0 };
        let prev_r = if i > 0 { rhs[i - 1] } else { 0.0 };
        let m = diag[i] + w * prev_c;
        c[i] = -w / m;
        rhs[i] = (rhs[i] + w * prev_r) / m;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    rhs
}

/// Local path smoothing over the last `window` frames, re-solved at every
/// frame. Emits frame `t - 1` when frame `t` arrives; earlier outputs stay
/// in the window as soft anchors.
#[derive(Debug, Clone)]
pub struct Meshflow {
    params: MeshflowParams,
    raw: VecDeque<f64>,
    /// Emitted outputs for the frames in `raw`, oldest first.
    emitted: VecDeque<f64>,
    last_solution: Vec<f64>,
    finished: bool,
}

impl Meshflow {
    pub fn new(params: MeshflowParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            raw: VecDeque::with_capacity(params.window + 1),
            emitted: VecDeque::with_capacity(params.window + 1),
            last_solution: Vec::new(),
            finished: false,
        })
    }
}

impl StreamFilter for Meshflow {
    fn kind(&self) -> FilterKind {
        FilterKind::Meshflow
    }

    fn latency(&self) -> usize {
        1
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.raw.push_back(value);
        if self.raw.len() > self.params.window {
            self.raw.pop_front();
            self.emitted.pop_front();
        }
        let x: Vec<f64> = self.raw.iter().copied().collect();
        let anchors: Vec<Option<f64>> = (0..x.len()).map(|i| self.emitted.get(i).copied()).collect();
        self.last_solution = meshflow_window(&x, &anchors, self.params.w);
        if x.len() < 2 {
            return Ok(Vec::new());
        }
        let y = self.last_solution[x.len() - 2];
        self.emitted.push_back(y);
        Ok(vec![y])
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.finished = true;
        Ok(self.last_solution.last().copied().into_iter().collect())
    }
}
