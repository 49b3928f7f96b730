use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::conv::{Activation, ConvLayer, KERNEL};
use super::tensor::Tensor1;
use crate::error::{Error, Result};

pub const FILTER_COUNTS: [usize; 5] = [16, 32, 32, 16, 1];
/// Frames on either side of an output that can influence it.
pub const RADIUS: usize = FILTER_COUNTS.len();
pub const RECEPTIVE_FIELD: usize = 2 * RADIUS + 1;

/// Five stride-1 convolutions with an additive skip from the first layer's
/// activations into the fourth layer's pre-activation.
///
/// The network predicts a correction: [`UNet1D::predict`] returns
/// `u + forward(u)`. Layer-1 kernels are kept at zero sum over their taps, so
/// adding a constant to `u` leaves `forward(u)` unchanged away from the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct UNet1D {
    pub layers: [ConvLayer; 5],
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    pub input: Tensor1,
    /// Activated outputs of layers 1..=4 and the final output.
    pub acts: [Tensor1; 5],
}

impl UNet1D {
    pub fn zeros() -> Self {
        let mut ins = 1;
        let layers = FILTER_COUNTS.map(|out| {
            let act = if out == 1 {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let l = ConvLayer::zeros(ins, out, act);
            ins = out;
            l
        });
        Self { layers }
    }

    /// Glorot-uniform kernels, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros();
        for l in &mut m.layers {
            let fan_in = (l.in_ch * KERNEL) as f64;
            let fan_out = (l.out_ch * KERNEL) as f64;
            let a = (6.0 / (fan_in + fan_out)).sqrt();
            for w in &mut l.kernel {
                *w = rng.random_range(-a..=a);
            }
        }
        m.project();
        m
    }

    /// Makes every layer-1 kernel sum to zero over its taps.
    pub fn project(&mut self) {
        let l = &mut self.layers[0];
        for o in 0..l.out_ch {
            let k = &mut l.kernel[o * l.in_ch * KERNEL..(o + 1) * l.in_ch * KERNEL];
            let mean = k.iter().sum::<f64>() / k.len() as f64;
            k.iter_mut().for_each(|w| *w -= mean);
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.kernel.len() + l.bias.len()).sum()
    }

    /// Kernels and biases in layer order: `[k1, b1, k2, b2, ...]`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.kernel.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.kernel.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros()
    }

    pub fn forward_trace(&self, x: &Tensor1) -> Result<Trace> {
        if x.channels() != 1 {
            return Err(Error::ChannelMismatch {
                expected: 1,
                got: x.channels(),
            });
        }
        if x.length() < RECEPTIVE_FIELD {
            return Err(Error::InputTooShort {
                len: x.length(),
                min: RECEPTIVE_FIELD,
            });
        }
        let [l1, l2, l3, l4, l5] = &self.layers;
        let h1 = l1.forward(x)?;
        let h2 = l2.forward(&h1)?;
        let h3 = l3.forward(&h2)?;
        let mut h4 = l4.linear(&h3)?;
        for (a, b) in h4.data_mut().iter_mut().zip(h1.data()) {
            *a += b;
        }
        l4.activate(&mut h4);
        let out = l5.forward(&h4)?;
        Ok(Trace {
            input: x.clone(),
            acts: [h1, h2, h3, h4, out],
        })
    }

    /// Raw network output (the correction).
    pub fn forward(&self, x: &Tensor1) -> Result<Tensor1> {
        Ok(self.forward_trace(x)?.acts[4].clone())
    }

    /// `u + forward(u)` for a one-channel signal.
    pub fn predict(&self, u: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(&Tensor1::signal(u)?)?;
        Ok(u.iter().zip(out.data()).map(|(a, b)| a + b).collect())
    }

    /// Parameter gradients for a cotangent on the raw output.
    pub fn backward(&self, trace: &Trace, d_out: &Tensor1) -> Result<UNet1D> {
        let [l1, l2, l3, l4, l5] = &self.layers;
        let [h1, h2, h3, h4, out] = &trace.acts;
        let mut grads = self.zeros_like();
        let mut put = |i: usize, g: &super::conv::ConvGrads| {
            grads.layers[i].kernel.copy_from_slice(&g.kernel);
            grads.layers[i].bias.copy_from_slice(&g.bias);
        };

        let mut d = d_out.clone();
        l5.through_activation(out, &mut d);
        let g5 = l5.backward(h4, &d)?;
        put(4, &g5);

        let mut d4 = g5.input;
        l4.through_activation(h4, &mut d4);
        let g4 = l4.backward(h3, &d4)?;
        put(3, &g4);

        let mut d3 = g4.input;
        l3.through_activation(h3, &mut d3);
        let g3 = l3.backward(h2, &d3)?;
        put(2, &g3);

        let mut d2 = g3.input;
        l2.through_activation(h2, &mut d2);
        let g2 = l2.backward(h1, &d2)?;
        put(1, &g2);

        // the skip feeds h1 straight into layer 4's pre-activation
        let mut d1 = g2.input;
        for (a, b) in d1.data_mut().iter_mut().zip(d4.data()) {
            *a += b;
        }
        l1.through_activation(h1, &mut d1);
        let g1 = l1.backward(&trace.input, &d1)?;
        put(0, &g1);
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_counts() {
        let m = UNet1D::init(1);
        assert_eq!(m.param_count(), (16 + 512 + 1024 + 512 + 16) * 3 + 16 + 32 + 32 + 16 + 1);
        let y = m.forward(&Tensor1::zeros(1, 512)).unwrap();
        assert_eq!((y.channels(), y.length()), (1, 512));
        assert!(matches!(
            m.forward(&Tensor1::zeros(1, 10)),
            Err(Error::InputTooShort { len: 10, min: 11 })
        ));
    }

    #[test]
    fn zero_model_predicts_input() {
        let u = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0];
        assert_eq!(UNet1D::zeros().predict(&u).unwrap(), u.to_vec());
    }

    #[test]
    fn init_is_seeded_and_projected() {
        let a = UNet1D::init(7);
        assert_eq!(a, UNet1D::init(7));
        assert_ne!(a, UNet1D::init(8));
        for o in 0..16 {
            let s: f64 = a.layers[0].kernel[o * 3..o * 3 + 3].iter().sum();
            assert!(s.abs() < 1e-15);
        }
    }
}
