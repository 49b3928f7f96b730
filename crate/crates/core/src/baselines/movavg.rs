use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovAvgParams {
    pub window: usize,
}

impl Default for MovAvgParams {
    fn default() -> Self {
        Self { window: 16 }
    }
}

/// Mean of the last `window` inputs (fewer at the start of the stream).
#[derive(Debug, Clone)]
pub struct MovAvg {
    window: usize,
    recent: VecDeque<f64>,
}

impl MovAvg {
    pub fn new(params: MovAvgParams) -> Result<Self> {
        if params.window == 0 {
            return Err(Error::InvalidParameter("moving-average window must be >= 1".into()));
        }
        Ok(Self {
            window: params.window,
            recent: VecDeque::with_capacity(params.window),
        })
    }
}

impl StreamFilter for MovAvg {
    fn kind(&self) -> FilterKind {
        FilterKind::MovAvg
    }

    fn latency(&self) -> usize {
        0
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(value);
        // summed afresh so no rounding drift accumulates
        let sum: f64 = self.recent.iter().sum();
        Ok(vec![sum / self.recent.len() as f64])
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}
