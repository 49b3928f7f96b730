use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step_model, AdamState};
use super::data::{TrainWindow, WINDOW_LEN};
use super::loss::loss;
use super::tensor::Tensor1;
use super::unet::{UNet1D, RADIUS, RECEPTIVE_FIELD};
use crate::convex::Lambdas;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub window_len: usize,
    pub stride: usize,
    pub lr: f64,
    pub plateau_patience: usize,
    pub decay: f64,
    /// Fraction of windows (taken from the end) held out for validation.
    pub validation: f64,
    /// `l1` is not used by the loss.
    pub lambdas: Lambdas,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch: 16,
            window_len: WINDOW_LEN,
            stride: 64,
            lr: 1e-3,
            plateau_patience: 4,
            decay: 0.1,
            validation: 0.1,
            lambdas: Lambdas::SYNTHETIC,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambdas.validate()?;
        if self.window_len < RECEPTIVE_FIELD + 2 * RADIUS {
            return Err(Error::InvalidParameter(format!(
                "window_len must be >= {}, got {}",
                RECEPTIVE_FIELD + 2 * RADIUS,
                self.window_len
            )));
        }
        if self.batch == 0 || self.epochs == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter("epochs, batch and stride must be >= 1".into()));
        }
        if !(self.lr > 0.0) || !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need lr > 0 and 0 < decay <= 1, got {} and {}",
                self.lr, self.decay
            )));
        }
        if !(0.0..1.0).contains(&self.validation) {
            return Err(Error::InvalidParameter(format!(
                "validation fraction must be in [0, 1), got {}",
                self.validation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-frame loss over the training batches of the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights with the lowest validation loss.
    pub model: UNet1D,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Per-frame loss of one window and the gradient it induces. Frames within
/// `RADIUS` of either edge see zero padding and are left out.
pub fn window_loss(model: &UNet1D, w: &TrainWindow, lambdas: &Lambdas, grads: Option<&mut UNet1D>) -> Result<f64> {
    let n = w.input.len();
    if w.target.len() != n {
        return Err(Error::LengthMismatch {
            what: "window input vs target",
            left: n,
            right: w.target.len(),
        });
    }
    let trace = model.forward_trace(&Tensor1::signal(&w.input)?)?;
    let out = trace.acts[4].data();
    let (lo, hi) = (RADIUS, n - RADIUS);
    let y: Vec<f64> = (lo..hi).map(|i| w.input[i] + out[i]).collect();
    let (value, g) = loss(&y, &w.target[lo..hi], lambdas)?;
    let scale = 1.0 / (hi - lo) as f64;
    if let Some(acc) = grads {
        let mut d = Tensor1::zeros(1, n);
        for (i, gi) in g.iter().enumerate() {
            d.data_mut()[lo + i] = gi * scale;
        }
        let gm = model.backward(&trace, &d)?;
        for (a, b) in acc.tensors_mut().into_iter().zip(gm.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
    Ok(value * scale)
}

pub fn train(windows: &[TrainWindow], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    if let Some(w) = windows.iter().find(|w| w.input.len() != config.window_len) {
        return Err(Error::LengthMismatch {
            what: "training window vs window_len",
            left: w.input.len(),
            right: config.window_len,
        });
    }
    let n_val = ((windows.len() as f64) * config.validation).round() as usize;
    let n_val = n_val.min(windows.len() - 1);
    let (train_set, val_set) = windows.split_at(windows.len() - n_val);
    // with nothing held out, validate on the training windows
    let val_set = if val_set.is_empty() { train_set } else { val_set };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = UNet1D::init(config.seed);
    let mut adam = AdamState::new(config.lr);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = (f64::INFINITY, model.clone(), 0);
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch).enumerate() {
            let mut grads = model.zeros_like();
            let mut batch_loss = 0.0;
            for &i in chunk {
                batch_loss += window_loss(&model, &train_set[i], &config.lambdas, Some(&mut grads))?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    loss: batch_loss,
                });
            }
            let inv = 1.0 / chunk.len() as f64;
            for t in grads.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= inv);
            }
            adam_step_model(&mut model, &grads, &mut adam)?;
            model.project();
            total += batch_loss;
        }
        let train_loss = total / train_set.len() as f64;
        let mut val = 0.0;
        for w in val_set {
            val += window_loss(&model, w, &config.lambdas, None)?;
        }
        let val_loss = val / val_set.len() as f64;
        if !val_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: usize::MAX,
                loss: val_loss,
            });
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            lr: adam.lr,
        });
        log::info!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6} lr {:e}", adam.lr);

        if val_loss < best.0 {
            best = (val_loss, model.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale > config.plateau_patience {
                adam.lr *= config.decay;
                stale = 0;
            }
        }
    }
    Ok(TrainOutcome {
        model: best.1,
        history,
        best_epoch: best.2,
    })
}
