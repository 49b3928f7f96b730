//! JSON weight files. Numbers are written with shortest round-trip formatting,
//! so save -> load -> save reproduces the bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::conv::{Activation, KERNEL};
use super::unet::{UNet1D, FILTER_COUNTS};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipSpec {
    pub from: usize,
    pub to: usize,
}

/// Front-end settings the weights were trained with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontEndSpec {
    pub tv_lam: f64,
    pub future: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub format_version: u32,
    pub filter_counts: Vec<usize>,
    pub kernel_size: usize,
    pub activations: Vec<Activation>,
    pub skip: SkipSpec,
    /// Output is `input + network`.
    pub residual: bool,
    pub front_end: FrontEndSpec,
    /// `kernels[layer][out][in][tap]`.
    pub kernels: Vec<Vec<Vec<Vec<f64>>>>,
    pub biases: Vec<Vec<f64>>,
}

/// A model together with the front end it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub model: UNet1D,
    pub front_end: FrontEndSpec,
}

impl Weights {
    pub fn to_file(&self) -> WeightsFile {
        let m = &self.model;
        WeightsFile {
            format_version: FORMAT_VERSION,
            filter_counts: FILTER_COUNTS.to_vec(),
            kernel_size: KERNEL,
            activations: m.layers.iter().map(|l| l.activation).collect(),
            skip: SkipSpec { from: 1, to: 4 },
            residual: true,
            front_end: self.front_end,
            kernels: m
                .layers
                .iter()
                .map(|l| {
                    (0..l.out_ch)
                        .map(|o| (0..l.in_ch).map(|c| (0..KERNEL).map(|k| l.tap(o, c, k)).collect()).collect())
                        .collect()
                })
                .collect(),
            biases: m.layers.iter().map(|l| l.bias.clone()).collect(),
        }
    }

    pub fn from_file(f: &WeightsFile) -> Result<Self> {
        let schema = |msg: String| Err(Error::Schema(msg));
        if f.format_version != FORMAT_VERSION {
            return schema(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                f.format_version
            ));
        }
        if f.filter_counts != FILTER_COUNTS {
            return schema(format!("filter_counts {:?}, expected {FILTER_COUNTS:?}", f.filter_counts));
        }
        if f.kernel_size != KERNEL {
            return schema(format!("kernel_size {}, expected {KERNEL}", f.kernel_size));
        }
        if f.skip != (SkipSpec { from: 1, to: 4 }) || !f.residual {
            return schema("only the layer 1 -> 4 skip with a residual output is supported".into());
        }
        if !(f.front_end.tv_lam >= 0.0) || !f.front_end.tv_lam.is_finite() {
            return schema(format!("bad front_end.tv_lam {}", f.front_end.tv_lam));
        }
        let mut model = UNet1D::zeros();
        let expected_acts: Vec<Activation> = model.layers.iter().map(|l| l.activation).collect();
        if f.activations != expected_acts {
            return schema(format!("activations {:?}, expected {expected_acts:?}", f.activations));
        }
        if f.kernels.len() != model.layers.len() || f.biases.len() != model.layers.len() {
            return schema("need one kernel and one bias entry per layer".into());
        }
        for (i, l) in model.layers.iter_mut().enumerate() {
            let k = &f.kernels[i];
            let shape_ok = k.len() == l.out_ch
                && k.iter().all(|o| o.len() == l.in_ch && o.iter().all(|c| c.len() == KERNEL));
            if !shape_ok {
                return schema(format!("layer {} kernel must be {}x{}x{KERNEL}", i + 1, l.out_ch, l.in_ch));
            }
            if f.biases[i].len() != l.out_ch {
                return schema(format!("layer {} needs {} biases, got {}", i + 1, l.out_ch, f.biases[i].len()));
            }
            l.kernel = k.iter().flatten().flatten().copied().collect();
            l.bias = f.biases[i].clone();
        }
        if model.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return schema("non-finite weight".into());
        }
        Ok(Self {
            model,
            front_end: f.front_end,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: WeightsFile = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(&f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
