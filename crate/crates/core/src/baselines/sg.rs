use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Centered;
use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgParams {
    pub window: usize,
    pub degree: usize,
}

impl Default for SgParams {
    fn default() -> Self {
        Self { window: 51, degree: 3 }
    }
}

impl SgParams {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_multiple_of(2) || self.degree == 0 || self.degree >= self.window {
            return Err(Error::InvalidParameter(format!(
                "SG needs an odd window and 1 <= degree < window, got window {} degree {}",
                self.window, self.degree
            )));
        }
        Ok(())
    }
}

/// Weights `w` such that `sum w[i] x[i]` is the value at position `c` of the
/// least-squares polynomial of degree `degree` through `x[0..len]`. The degree
/// drops to `len - 1` when there are too few points.
pub fn sg_coefficients(len: usize, c: usize, degree: usize) -> Vec<f64> {
    let d = degree.min(len - 1);
    let scale = (len.max(2) - 1) as f64;
    let a = DMatrix::from_fn(len, d + 1, |i, j| ((i as f64 - c as f64) / scale).powi(j as i32));
    let gram = a.transpose() * &a;
    let mut e0 = DVector::zeros(d + 1);
    e0[0] = 1.0;
    // the Gram matrix of a Vandermonde block with distinct nodes is SPD
    let sol = gram.cholesky().expect("Vandermonde Gram matrix is positive definite").solve(&e0);
    (a * sol).iter().copied().collect()
}

/// Centered Savitzky-Golay smoother; windows are truncated and refit at the
/// ends of the stream.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    params: SgParams,
    interior: Vec<f64>,
    buf: Centered,
}

impl SavitzkyGolay {
    pub fn new(params: SgParams) -> Result<Self> {
        params.validate()?;
        let half = params.window / 2;
        Ok(Self {
            params,
            interior: sg_coefficients(params.window, half, params.degree),
            buf: Centered::new(half),
        })
    }

    fn value(interior: &[f64], degree: usize, w: &[f64], c: usize) -> f64 {
        if w.len() == interior.len() {
            return interior.iter().zip(w).map(|(a, b)| a * b).sum();
        }
        let coef = sg_coefficients(w.len(), c, degree);
        coef.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

impl StreamFilter for SavitzkyGolay {
    fn kind(&self) -> FilterKind {
        FilterKind::Sg
    }

    fn latency(&self) -> usize {
        self.params.window / 2
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        let (coef, d) = (&self.interior, self.params.degree);
        self.buf.push(value, |w, c| Self::value(coef, d, w, c))
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        let (coef, d) = (&self.interior, self.params.degree);
        self.buf.finish(|w, c| Self::value(coef, d, w, c))
    }
}
