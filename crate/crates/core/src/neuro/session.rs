//! Streaming CineCNN: causal TV front end, then the network on the committed
//! TV values.
//!
//! With `f` frames of lookahead, the TV stage commits frame `j` once frame
//! `j + f - r` is in (`r = min(5, f)`), and the network emits frame `k` once
//! TV frames up to `k + r` are committed. Frames before the start are padded
//! with the first committed value; frames past the end (or past `k + r` when
//! `f < 5`) with the last one the emitted frame may see.

use std::sync::Arc;

use super::tensor::Tensor1;
use super::unet::{UNet1D, RADIUS, RECEPTIVE_FIELD};
use crate::convex::Lambdas;
use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter, WindowConfig};
use crate::tv::SlidingTv;

/// Multiple of [`Lambdas::tv_weight`] used as the default TV weight. With
/// only `f - 5` frames of lookahead the plain mapping lets noise through as
/// small steps inside holds.
pub const TV_SCALE: f64 = 4.0;

pub fn default_tv_lam(lambdas: &Lambdas) -> f64 {
    TV_SCALE * lambdas.tv_weight()
}

/// Future frames the network itself looks at.
pub fn net_lookahead(future: usize) -> usize {
    future.min(RADIUS)
}

/// Lookahead left for the TV stage.
pub fn tv_lookahead(future: usize) -> usize {
    future - net_lookahead(future)
}

/// TV front end applied to a whole sequence, exactly as the session does it.
pub fn front_end(x: &[f64], future: usize, tv_lam: f64) -> Result<Vec<f64>> {
    SlidingTv::run(tv_lam, tv_lookahead(future), x)
}

pub struct CineCnn {
    model: Arc<UNet1D>,
    tv: SlidingTv,
    future: usize,
    look: usize,
    next: usize,
    finished: bool,
    scratch: Tensor1,
}

impl CineCnn {
    /// Only `present = 1` is supported. `buffer` is not used: an output
    /// depends on the 11 TV values around it, and only those are fed to the
    /// network (a longer window gives the same value bit for bit).
    pub fn new(model: Arc<UNet1D>, window: WindowConfig, tv_lam: f64) -> Result<Self> {
        window.validate()?;
        if window.present != 1 {
            return Err(Error::InvalidParameter(format!(
                "CineCNN emits one frame per step (present = 1), got {}",
                window.present
            )));
        }
        Ok(Self {
            model,
            tv: SlidingTv::new(tv_lam, tv_lookahead(window.future))?,
            future: window.future,
            look: net_lookahead(window.future),
            next: 0,
            finished: false,
            scratch: Tensor1::zeros(1, RECEPTIVE_FIELD),
        })
    }

    /// Output for frame `k`, seeing TV values up to index `last`.
    fn emit(&mut self, k: usize, last: usize) -> Result<f64> {
        let u = self.tv.committed();
        for (i, slot) in self.scratch.data_mut().iter_mut().enumerate() {
            let j = (k + i).saturating_sub(RADIUS).min(last);
            *slot = u[j];
        }
        let out = self.model.forward(&self.scratch)?;
        Ok(u[k] + out.data()[RADIUS])
    }
}

impl StreamFilter for CineCnn {
    fn kind(&self) -> FilterKind {
        FilterKind::CineCnn
    }

    fn latency(&self) -> usize {
        self.future
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.tv.push(value);
        let mut out = Vec::new();
        while self.tv.committed().len() > self.next + self.look {
            let k = self.next;
            out.push(self.emit(k, k + self.look)?);
            self.next += 1;
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        if self.finished {
            return Err(Error::Finalized);
        }
        self.finished = true;
        self.tv.finish();
        let n = self.tv.committed().len();
        let mut out = Vec::with_capacity(n - self.next);
        while self.next < n {
            let k = self.next;
            out.push(self.emit(k, (k + self.look).min(n - 1))?);
            self.next += 1;
        }
        Ok(out)
    }
}

/// One forward pass over the padded TV sequence. Matches the streaming
/// output bit for bit when `future >= 5`.
pub fn cinecnn_batch(model: &UNet1D, x: &[f64], future: usize, tv_lam: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Ok(Vec::new());
    }
    if future < RADIUS {
        return Err(Error::InvalidParameter(format!(
            "the single-pass batch form needs future >= {RADIUS}, got {future}"
        )));
    }
    let u = front_end(x, future, tv_lam)?;
    let mut padded = vec![u[0]; RADIUS];
    padded.extend_from_slice(&u);
    padded.extend(std::iter::repeat_n(u[u.len() - 1], RADIUS));
    let out = model.forward(&Tensor1::signal(&padded)?)?;
    Ok(u.iter()
        .zip(&out.data()[RADIUS..])
        .map(|(a, b)| a + b)
        .collect())
}
