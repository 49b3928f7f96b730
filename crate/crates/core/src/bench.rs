//! Window-size sweeps on a synthetic suite: accuracy per (p, f) cell plus
//! streaming throughput.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{measure_fps, precision, residual_motion, smoothness, MIN_STATIC};
use crate::neuro::Weights;
use crate::synth::CorpusItem;
use crate::trajectory::{FilterKind, FilterSession, WindowConfig};

pub const THREADS_ENV: &str = "CINEFILTER_THREADS";

/// Worker count for parallel evaluation: `CINEFILTER_THREADS` if set to a
/// positive integer, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Maps `f` over `items` on up to `threads` scoped workers, keeping order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every item is mapped")).collect()
}

/// Accuracy of one filter setting over a suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteScore {
    /// Mean over sequences of the per-sequence means.
    pub precision_mean: f64,
    pub smoothness_mean: f64,
    /// Pooled over every qualifying hold of every sequence.
    pub residual_motion: f64,
    pub residual_slopes: usize,
}

pub fn score_outputs(outputs: &[Vec<f64>], suite: &[CorpusItem]) -> Result<SuiteScore> {
    if suite.is_empty() {
        return Err(Error::Empty("benchmark suite"));
    }
    if outputs.len() != suite.len() {
        return Err(Error::LengthMismatch {
            what: "outputs vs suite",
            left: outputs.len(),
            right: suite.len(),
        });
    }
    let (mut p, mut s, mut rm, mut slopes) = (0.0, 0.0, 0.0, 0);
    for (y, item) in outputs.iter().zip(suite) {
        let gt = &item.gt.values;
        p += precision(y, gt)?.1;
        s += smoothness(y, gt)?.1;
        let r = residual_motion(y, gt, MIN_STATIC, 0.0)?;
        rm += r.value * r.slopes as f64;
        slopes += r.slopes;
    }
    let n = suite.len() as f64;
    Ok(SuiteScore {
        precision_mean: p / n,
        smoothness_mean: s / n,
        residual_motion: if slopes > 0 { rm / slopes as f64 } else { 0.0 },
        residual_slopes: slopes,
    })
}

/// Runs fresh sessions over every noisy sequence of the suite.
pub fn run_suite<F>(make: F, suite: &[CorpusItem]) -> Result<Vec<Vec<f64>>>
where
    F: Fn() -> Result<FilterSession>,
{
    suite.iter().map(|item| make()?.run(&item.noisy)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub present: usize,
    pub future: usize,
    pub score: SuiteScore,
    pub fps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub filter: FilterKind,
    pub buffer: usize,
    pub sizes: Vec<usize>,
    pub sequences: usize,
    pub cells: Vec<Cell>,
}

impl BenchReport {
    pub fn cell(&self, present: usize, future: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.present == present && c.future == future)
    }

    /// Two tables with `p` down and `f` across: `(precision, smoothness)` and
    /// fps. Cells with `p > f` are not valid settings and are left blank.
    pub fn markdown(&self) -> String {
        let presents: Vec<usize> = {
            let mut v: Vec<usize> = self.cells.iter().map(|c| c.present).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let header = |title: &str| {
            let mut s = format!("| {title} |");
            for f in &self.sizes {
                let _ = write!(s, " f={f} |");
            }
            s.push_str("\n|---|");
            s.push_str(&"---|".repeat(self.sizes.len()));
            s.push('\n');
            s
        };
        let mut out = format!("{} (b = {}, {} sequences)\n\n", self.filter, self.buffer, self.sequences);
        out.push_str(&header("(precision, smoothness)"));
        for &p in &presents {
            let _ = write!(out, "| p={p} |");
            for &f in &self.sizes {
                match self.cell(p, f) {
                    Some(c) => {
                        let _ = write!(out, " ({:.4}, {:.4}) |", c.score.precision_mean, c.score.smoothness_mean);
                    }
                    None => out.push_str("  |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str(&header("fps"));
        for &p in &presents {
            let _ = write!(out, "| p={p} |");
            for &f in &self.sizes {
                match self.cell(p, f) {
                    Some(c) => {
                        let _ = write!(out, " {:.0} |", c.fps);
                    }
                    None => out.push_str("  |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// The (p, f) cells swept for a filter: the upper triangle `p <= f` for
/// CineConvex, `p = 1` for CineCNN. Baselines have no window to sweep and
/// get the single cell `(1, latency)`.
pub fn sweep_cells(kind: FilterKind, sizes: &[usize], latency: usize) -> Vec<(usize, usize)> {
    match kind {
        FilterKind::CineConvex => sizes
            .iter()
            .flat_map(|&p| sizes.iter().filter(move |&&f| f >= p).map(move |&f| (p, f)))
            .collect(),
        FilterKind::CineCnn => sizes.iter().map(|&f| (1, f)).collect(),
        _ => vec![(1, latency)],
    }
}

fn with_window(config: &Config, kind: FilterKind, present: usize, future: usize) -> Result<Config> {
    let mut c = config.clone();
    match kind {
        FilterKind::CineConvex => c.window = WindowConfig::new(present, c.window.buffer, future)?,
        FilterKind::CineCnn => c.cnn.window = WindowConfig::new(present, c.cnn.window.buffer, future)?,
        _ => {}
    }
    Ok(c)
}

/// What to sweep and where to measure it.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec<'a> {
    pub sizes: &'a [usize],
    pub suite: &'a [CorpusItem],
    /// Stream timed for fps, `fps_reps` runs per cell.
    pub fps_stream: &'a [f64],
    pub fps_reps: usize,
    pub threads: usize,
}

/// Sweeps `kind` over the (p, f) cells of `spec.sizes`, spreading cells over
/// worker threads.
pub fn sweep(config: &Config, kind: FilterKind, weights: Option<&Arc<Weights>>, spec: &SweepSpec) -> Result<BenchReport> {
    let SweepSpec {
        sizes,
        suite,
        fps_stream,
        fps_reps,
        threads,
    } = *spec;
    let latency = config.session(kind, weights)?.latency();
    let cells = sweep_cells(kind, sizes, latency);
    let results = par_map(&cells, threads, |&(p, f)| -> Result<Cell> {
        let c = with_window(config, kind, p, f)?;
        let make = || c.session(kind, weights);
        let outputs = run_suite(make, suite)?;
        let score = score_outputs(&outputs, suite)?;
        let fps = measure_fps(make, fps_stream, fps_reps)?;
        log::info!("{kind} p={p} f={f}: {score:?} fps {fps:.0}");
        Ok(Cell {
            present: p,
            future: f,
            score,
            fps,
        })
    });
    Ok(BenchReport {
        filter: kind,
        buffer: match kind {
            FilterKind::CineConvex => config.window.buffer,
            FilterKind::CineCnn => config.cnn.window.buffer,
            _ => 0,
        },
        sizes: if kind.is_baseline() { vec![latency] } else { sizes.to_vec() },
        sequences: suite.len(),
        cells: results.into_iter().collect::<Result<_>>()?,
    })
}
