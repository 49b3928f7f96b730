pub mod baselines;
pub mod bench;
pub mod config;
pub mod convex;
pub mod error;
pub mod metrics;
pub mod neuro;
pub mod offline;
pub mod synth;
pub mod trajectory;
pub mod tv;

pub use error::{Error, Result};
