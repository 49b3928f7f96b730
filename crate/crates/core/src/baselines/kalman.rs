use serde::{Deserialize, Serialize};

use super::positive;
use crate::error::Result;
use crate::trajectory::{FilterKind, StreamFilter};

/// Constant-velocity model with piecewise-constant acceleration noise:
/// `Q = q [[1/4, 1/2], [1/2, 1]]`, `R = r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KalmanParams {
    pub q: f64,
    pub r: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        Self { q: 1e-3, r: 1e-1 }
    }
}

impl KalmanParams {
    pub fn validate(&self) -> Result<()> {
        positive("q", self.q)?;
        positive("r", self.r)
    }
}

pub const INITIAL_COVARIANCE: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct Kalman {
    params: KalmanParams,
    /// (position, velocity); `None` until the first sample.
    state: Option<[f64; 2]>,
    /// Symmetric covariance as (p00, p01, p11).
    cov: [f64; 3],
    gain: [f64; 2],
}

impl Kalman {
    pub fn new(params: KalmanParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            state: None,
            cov: [INITIAL_COVARIANCE, 0.0, INITIAL_COVARIANCE],
            gain: [0.0; 2],
        })
    }

    /// Gain of the most recent update.
    pub fn gain(&self) -> [f64; 2] {
        self.gain
    }

    pub fn state(&self) -> Option<[f64; 2]> {
        self.state
    }

    fn update(&mut self, [pos, vel]: [f64; 2], z: f64) -> f64 {
        let [p00, p01, p11] = self.cov;
        let s = p00 + self.params.r;
        let (k0, k1) = (p00 / s, p01 / s);
        let innov = z - pos;
        self.state = Some([pos + k0 * innov, vel + k1 * innov]);
        self.cov = [(1.0 - k0) * p00, (1.0 - k0) * p01, p11 - k1 * p01];
        self.gain = [k0, k1];
        pos + k0 * innov
    }
}

impl StreamFilter for Kalman {
    fn kind(&self) -> FilterKind {
        FilterKind::Kalman
    }

    fn latency(&self) -> usize {
        0
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        let prior = match self.state {
            None => [value, 0.0],
            Some([pos, vel]) => {
                let [p00, p01, p11] = self.cov;
                let q = self.params.q;
                // P <- F P F^T + Q with F = [[1, 1], [0, 1]]
                self.cov = [
                    p00 + 2.0 * p01 + p11 + 0.25 * q,
                    p01 + p11 + 0.5 * q,
                    p11 + q,
                ];
                [pos + vel, vel]
            }
        };
        Ok(vec![self.update(prior, value)])
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }
}
