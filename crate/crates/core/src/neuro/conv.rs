use serde::{Deserialize, Serialize};

use super::tensor::Tensor1;
use crate::error::{Error, Result};

pub const KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// Stride-1 cross-correlation with 3 taps and zero padding 1.
///
/// `kernel[(o * in_ch + c) * 3 + k]` multiplies `input[c][i + k - 1]` for
/// output `o` at position `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Parameter gradients of one layer plus the input cotangent.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Tensor1,
}

impl ConvLayer {
    pub fn zeros(in_ch: usize, out_ch: usize, activation: Activation) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel: vec![0.0; in_ch * out_ch * KERNEL],
            bias: vec![0.0; out_ch],
            activation,
        }
    }

    pub fn tap(&self, o: usize, c: usize, k: usize) -> f64 {
        self.kernel[(o * self.in_ch + c) * KERNEL + k]
    }

    fn check(&self, input: &Tensor1) -> Result<()> {
        if input.channels() != self.in_ch {
            return Err(Error::ChannelMismatch {
                expected: self.in_ch,
                got: input.channels(),
            });
        }
        Ok(())
    }

    /// Pre-activation output.
    pub fn linear(&self, input: &Tensor1) -> Result<Tensor1> {
        self.check(input)?;
        let n = input.length();
        let mut out = Tensor1::zeros(self.out_ch, n);
        for o in 0..self.out_ch {
            let row = out.channel_mut(o);
            row.fill(self.bias[o]);
            for c in 0..self.in_ch {
                let x = input.channel(c);
                let w = &self.kernel[(o * self.in_ch + c) * KERNEL..][..KERNEL];
                // the accumulation order per output element does not depend on
                // `n`, so any two inputs sharing a neighbourhood agree bitwise
                for k in 0..KERNEL {
                    let (lo, hi) = tap_range(k, n);
                    let off = k as isize - 1;
                    let wk = w[k];
                    for (r, xv) in row[lo..hi]
                        .iter_mut()
                        .zip(&x[(lo as isize + off) as usize..(hi as isize + off) as usize])
                    {
                        *r += wk * xv;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn activate(&self, pre: &mut Tensor1) {
        if self.activation == Activation::Relu {
            for v in pre.data_mut() {
                *v = v.max(0.0);
            }
        }
    }

    pub fn forward(&self, input: &Tensor1) -> Result<Tensor1> {
        let mut out = self.linear(input)?;
        self.activate(&mut out);
        Ok(out)
    }

    /// Turns a cotangent on the activated output into one on the
    /// pre-activation, given the activated output.
    pub fn through_activation(&self, out: &Tensor1, d_out: &mut Tensor1) {
        if self.activation == Activation::Relu {
            for (d, y) in d_out.data_mut().iter_mut().zip(out.data()) {
                if *y <= 0.0 {
                    *d = 0.0;
                }
            }
        }
    }

    /// Gradients for a cotangent `d_pre` on the pre-activation output.
    pub fn backward(&self, input: &Tensor1, d_pre: &Tensor1) -> Result<ConvGrads> {
        self.check(input)?;
        let n = input.length();
        if d_pre.channels() != self.out_ch || d_pre.length() != n {
            return Err(Error::LengthMismatch {
                what: "output cotangent vs layer output",
                left: d_pre.channels() * d_pre.length(),
                right: self.out_ch * n,
            });
        }
        let mut g = ConvGrads {
            kernel: vec![0.0; self.kernel.len()],
            bias: vec![0.0; self.out_ch],
            input: Tensor1::zeros(self.in_ch, n),
        };
        for o in 0..self.out_ch {
            let d = d_pre.channel(o);
            g.bias[o] = d.iter().sum();
            for c in 0..self.in_ch {
                let x = input.channel(c);
                let base = (o * self.in_ch + c) * KERNEL;
                for k in 0..KERNEL {
                    let (lo, hi) = tap_range(k, n);
                    let off = k as isize - 1;
                    let xs = &x[(lo as isize + off) as usize..(hi as isize + off) as usize];
                    g.kernel[base + k] = d[lo..hi].iter().zip(xs).map(|(a, b)| a * b).sum();
                    let wk = self.kernel[base + k];
                    let gi = g.input.channel_mut(c);
                    for (gv, dv) in gi[(lo as isize + off) as usize..(hi as isize + off) as usize]
                        .iter_mut()
                        .zip(&d[lo..hi])
                    {
                        *gv += wk * dv;
                    }
                }
            }
        }
        Ok(g)
    }
}

/// Output positions `[lo, hi)` for which tap `k` reads inside the input.
fn tap_range(k: usize, n: usize) -> (usize, usize) {
    match k {
        0 => (1, n),
        1 => (0, n),
        _ => (0, n.saturating_sub(1)),
    }
}
