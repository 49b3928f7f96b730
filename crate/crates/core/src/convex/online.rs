use super::{solve_window, Lambdas, SolverParams, WindowProblem};
use crate::error::{Error, Result};
use crate::trajectory::{FilterKind, StreamFilter, WindowConfig};

/// One solved window, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTrace {
    /// Absolute frame index of `solution[0]`.
    pub start: usize,
    /// Number of leading entries that were pinned to the previous solution.
    pub prefix_len: usize,
    pub solution: Vec<f64>,
}

/// Online sliding-window L1 trend filter.
///
/// The window spans `[t - b, t + f]`. Once frame `t + f` has arrived the window
/// is solved with `[t - b, t]` pinned to the previous window's solution, frames
/// `t .. t + p` are emitted and `t` advances by `p`.
#[derive(Debug)]
pub struct CineConvex {
    cfg: WindowConfig,
    lambdas: Lambdas,
    params: SolverParams,
    raw: Vec<f64>,
    /// Absolute frame index of `raw[0]`.
    base: usize,
    /// Next frame to commit.
    t: usize,
    prev: Option<(usize, Vec<f64>)>,
    trace: Option<Vec<WindowTrace>>,
}

impl CineConvex {
    pub fn new(cfg: WindowConfig, lambdas: Lambdas, params: SolverParams) -> Result<Self> {
        cfg.validate()?;
        lambdas.validate()?;
        params.validate()?;
        if lambdas.l0 <= 0.0 {
            return Err(Error::InvalidParameter(
                "l0 must be positive for filtering".into(),
            ));
        }
        Ok(Self {
            cfg,
            lambdas,
            params,
            raw: Vec::new(),
            base: 0,
            t: 0,
            prev: None,
            trace: None,
        })
    }

    /// Records every solved window (see [`CineConvex::take_trace`]).
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<WindowTrace> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn config(&self) -> WindowConfig {
        self.cfg
    }

    fn received(&self) -> usize {
        self.base + self.raw.len()
    }

    /// Solves the window ending (exclusively) at `end` and commits `count` frames.
    fn step(&mut self, end: usize, count: usize) -> Result<Vec<f64>> {
        let t = self.t;
        let start = t.saturating_sub(self.cfg.buffer);
        let x = self.raw[start - self.base..end - self.base].to_vec();
        let prefix = match &self.prev {
            Some((ps, sol)) => sol[start - ps..=t - ps].to_vec(),
            None => Vec::new(),
        };
        let prefix_len = prefix.len();
        let problem = WindowProblem::new(x, prefix, self.lambdas)?;
        let y = solve_window(&problem, &self.params)?;
        let out = y[t - start..t - start + count].to_vec();
        if let Some(tr) = self.trace.as_mut() {
            tr.push(WindowTrace {
                start,
                prefix_len,
                solution: y.clone(),
            });
        }
        self.prev = Some((start, y));
        self.t += count;

        // drop history that no future window can reach
        let keep_from = self.t.saturating_sub(self.cfg.buffer);
        if keep_from > self.base + 1024 {
            self.raw.drain(..keep_from - self.base);
            self.base = keep_from;
        }
        Ok(out)
    }
}

impl StreamFilter for CineConvex {
    fn kind(&self) -> FilterKind {
        FilterKind::CineConvex
    }

    fn latency(&self) -> usize {
        self.cfg.future
    }

    fn push(&mut self, value: f64) -> Result<Vec<f64>> {
        self.raw.push(value);
        let mut out = Vec::new();
        while self.received() > self.t + self.cfg.future {
            let end = self.t + self.cfg.future + 1;
            out.extend(self.step(end, self.cfg.present)?);
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<Vec<f64>> {
        let n = self.received();
        if self.t >= n {
            return Ok(Vec::new());
        }
        // one last window with a truncated future commits everything left
        self.step(n, n - self.t)
    }
}
