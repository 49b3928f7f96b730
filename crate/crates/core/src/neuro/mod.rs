//! CineCNN: a causal TV front end followed by a small 1D convolutional
//! network with hand-written gradients, trained without labels.

pub mod adam;
pub mod conv;
pub mod data;
pub mod loss;
pub mod session;
pub mod tensor;
pub mod train;
pub mod unet;
pub mod weights;

pub use adam::{adam_step, adam_step_model, AdamState};
pub use conv::{Activation, ConvLayer};
pub use data::{make_windows, TrainWindow};
pub use loss::loss;
pub use session::{cinecnn_batch, default_tv_lam, front_end, CineCnn};
pub use tensor::Tensor1;
pub use train::{train, EpochStats, TrainConfig, TrainOutcome};
pub use unet::UNet1D;
pub use weights::{FrontEndSpec, Weights};
