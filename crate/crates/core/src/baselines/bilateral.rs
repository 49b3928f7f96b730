use serde::{Deserialize, Serialize};

use super::{positive, Centered};
use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BilateralParams {
    /// Span of the window; frames within `window / 2` of the center are used.
    pub window: usize,
    pub sigma_t: f64,
    pub sigma_r: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            window: 64,
            sigma_t: 16.0,
            sigma_r: 1.0,
        }
    }
}

impl BilateralParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "bilateral window must be >= 2, got {}",
                self.window
            )));
        }
        positive("sigma_t", self.sigma_t)?;
        positive("sigma_r", self.sigma_r)
    }
}

/// Edge-preserving average over `[k - window/2, k + window/2]`, with weights
/// renormalized over the truncated window at the stream ends.
#[derive(Debug, Clone)]
pub struct Bilateral {
    params: BilateralParams,
    /// Temporal weight by distance from the center.
    temporal: Vec<f64>,
    buf: Centered,
}

impl Bilateral {
    pub fn new(params: BilateralParams) -> Result<Self> {
        params.validate()?;
        let half = params.window / 2;
        let temporal = (0..=half)
            .map(|d| (-((d * d) as f64) / (2.0 * params.sigma_t * params.sigma_t)).exp())
            .collect();
        Ok(Self {
            params,
            temporal,
            buf: Centered::new(half),
        })
    }

    fn value(temporal: &[f64], sigma_r: f64, w: &[f64], c: usize) -> f64 {
        let xc = w[c];
        let inv = 1.0 / (2.0 * sigma_r * sigma_r);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &x) in w.iter().enumerate() {
            let d = x - xc;
            let wt = temporal[i.abs_diff(c)] * (-d * d * inv).exp();
            // weights are relative to the center, which keeps the output
            // translation-equivariant
            num += wt * d;
            den += wt;
        }
        xc + num / den
    }
}

impl StreamFilter for Bilateral {
    fn kind(&self) -> FilterKind {
        FilterKind::Bilateral
    }

    fn latency(&self) -> usize {
        self.params.window / 2
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        let (t, s) = (&self.temporal, self.params.sigma_r);
        self.buf.push(value, |w, c| Self::value(t, s, w, c))
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        let (t, s) = (&self.temporal, self.params.sigma_r);
        self.buf.finish(|w, c| Self::value(t, s, w, c))
    }
}
