use super::session::front_end;
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryStream;

pub const WINDOW_LEN: usize = 512;

/// Network input (TV front-end output) and loss target (raw samples).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainWindow {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// Cuts every stream into overlapping windows of `n` frames at `stride`.
///
/// The front end runs once over each whole stream, as it would when
/// streaming, and the windows are cut from its output. Streams shorter than
/// `n` are skipped with a warning.
pub fn make_windows(
    streams: &[TrajectoryStream],
    n: usize,
    stride: usize,
    future: usize,
    tv_lam: f64,
) -> Result<Vec<TrainWindow>> {
    if n == 0 || stride == 0 {
        return Err(Error::InvalidParameter(format!(
            "window length and stride must be >= 1, got {n} and {stride}"
        )));
    }
    let mut out = Vec::new();
    for (i, s) in streams.iter().enumerate() {
        if s.len() < n {
            log::warn!("stream {i} has {} frames, fewer than the window length {n}; skipped", s.len());
            continue;
        }
        let x = s.values();
        let u = front_end(&x, future, tv_lam)?;
        let mut start = 0;
        while start + n <= x.len() {
            out.push(TrainWindow {
                input: u[start..start + n].to_vec(),
                target: x[start..start + n].to_vec(),
            });
            start += stride;
        }
    }
    Ok(out)
}
