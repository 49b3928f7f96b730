use crate::error::{Error, Result};

/// Channel-major 1D activations: `data[c * length + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1 {
    channels: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor1 {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![0.0; channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::InvalidParameter(format!(
                "tensor shape must be positive, got {channels}x{length}"
            )));
        }
        if data.len() != channels * length {
            return Err(Error::LengthMismatch {
                what: "tensor data vs channels * length",
                left: data.len(),
                right: channels * length,
            });
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    /// One-channel tensor holding `values`.
    pub fn signal(values: &[f64]) -> Result<Self> {
        Self::from_vec(1, values.len(), values.to_vec())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }
}
