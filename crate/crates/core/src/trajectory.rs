//! Signal representation and the streaming filter contract.
//!
//! Every filter in this crate consumes one scalar sample per frame and emits
//! finalized smoothed samples in frame order. A filter declares a latency `L`:
//! the output for frame `k` is emitted no later than the push of frame `k + L`.
//! Emitted values are never revised. 2D paths are filtered as two independent
//! scalar sessions.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub frame: usize,
    pub value: f64,
}

impl Sample {
    pub fn new(frame: usize, value: f64) -> Self {
        Self { frame, value }
    }
}

/// Ordered samples with contiguous frame indices starting at 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryStream {
    samples: Vec<Sample>,
}

impl TrajectoryStream {
    pub fn from_values(values: &[f64]) -> Self {
        Self {
            samples: values
                .iter()
                .enumerate()
                .map(|(frame, &value)| Sample { frame, value })
                .collect(),
        }
    }

    /// Builds a stream from samples, checking that frames run 0, 1, 2, ...
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.frame != i {
                return Err(Error::Sequencing {
                    expected: i,
                    got: s.frame,
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads the `frame,value` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
        if headers.len() != 2 || &headers[0] != "frame" || &headers[1] != "value" {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header `frame,value`, found `{}`", join(&headers)),
            });
        }
        let mut samples = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| csv_error(&e, samples.len() as u64 + 2))?;
            let line = record
                .position()
                .map_or(samples.len() as u64 + 2, |p| p.line());
            if record.len() != 2 {
                return Err(Error::Csv {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let frame: usize = record[0].parse().map_err(|_| Error::Csv {
                line,
                message: format!("invalid frame index `{}`", &record[0]),
            })?;
            let value: f64 = record[1].parse().map_err(|_| Error::Csv {
                line,
                message: format!("invalid value `{}`", &record[1]),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line,
                    message: "non-finite value".into(),
                });
            }
            if frame != samples.len() {
                return Err(Error::Csv {
                    line,
                    message: format!("expected frame {}, found {frame}", samples.len()),
                });
            }
            samples.push(Sample { frame, value });
        }
        Ok(Self { samples })
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "frame,value")?;
        for s in &self.samples {
            writeln!(writer, "{},{}", s.frame, s.value)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn join(record: &csv::StringRecord) -> String {
    record.iter().collect::<Vec<_>>().join(",")
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Csv {
        line,
        message: e.to_string(),
    }
}

/// Sliding-window geometry: `present` frames are committed per step, `buffer`
/// frames of history are kept, `future` frames of lookahead are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub present: usize,
    pub buffer: usize,
    pub future: usize,
}

impl WindowConfig {
    pub const CINECONVEX: WindowConfig = WindowConfig {
        present: 8,
        buffer: 64,
        future: 16,
    };
    pub const CINECNN: WindowConfig = WindowConfig {
        present: 1,
        buffer: 15,
        future: 16,
    };

    pub fn new(present: usize, buffer: usize, future: usize) -> Result<Self> {
        let cfg = Self {
            present,
            buffer,
            future,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.present == 0 {
            return Err(Error::InvalidParameter("present must be >= 1".into()));
        }
        if self.future < self.present {
            return Err(Error::InvalidParameter(format!(
                "future ({}) must be >= present ({})",
                self.future, self.present
            )));
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self::CINECONVEX
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    CineConvex,
    CineCnn,
    Sg,
    Kalman,
    Bilateral,
    Meshflow,
    MovAvg,
}

impl FilterKind {
    pub const ALL: [FilterKind; 7] = [
        FilterKind::CineConvex,
        FilterKind::CineCnn,
        FilterKind::Sg,
        FilterKind::Kalman,
        FilterKind::Bilateral,
        FilterKind::Meshflow,
        FilterKind::MovAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::CineConvex => "cineconvex",
            FilterKind::CineCnn => "cinecnn",
            FilterKind::Sg => "sg",
            FilterKind::Kalman => "kalman",
            FilterKind::Bilateral => "bilateral",
            FilterKind::Meshflow => "meshflow",
            FilterKind::MovAvg => "movavg",
        }
    }

    pub fn is_baseline(self) -> bool {
        !matches!(self, FilterKind::CineConvex | FilterKind::CineCnn)
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown filter kind `{s}`")))
    }
}

/// The per-filter streaming core. Implementations see values only; frame
/// bookkeeping lives in [`FilterSession`].
pub trait StreamFilter: Send {
    fn kind(&self) -> FilterKind;

    /// Maximum number of frames between a sample's arrival and its output.
    fn latency(&self) -> usize;

    /// Consumes the next input value and returns any outputs that became final.
    fn push(&mut self, value: f64) -> Result<Vec<f64>>;

    /// Flushes every remaining output. Called exactly once, at end of stream.
    fn finish(&mut self) -> Result<Vec<f64>>;
}

/// Stateful wrapper enforcing frame sequencing and the emit contract around a
/// [`StreamFilter`].
pub struct FilterSession {
    filter: Box<dyn StreamFilter>,
    pushed: usize,
    emitted: usize,
    finalized: bool,
}

impl fmt::Debug for FilterSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterSession")
            .field("kind", &self.filter.kind())
            .field("pushed", &self.pushed)
            .field("emitted", &self.emitted)
            .field("finalized", &self.finalized)
            .finish()
    }
}

impl FilterSession {
    pub fn new(filter: Box<dyn StreamFilter>) -> Self {
        Self {
            filter,
            pushed: 0,
            emitted: 0,
            finalized: false,
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.filter.kind()
    }

    pub fn latency(&self) -> usize {
        self.filter.latency()
    }

    pub fn pushed(&self) -> usize {
        self.pushed
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn push(&mut self, sample: Sample) -> Result<Vec<Sample>> {
        if self.finalized {
            return Err(Error::Finalized);
        }
        if sample.frame != self.pushed {
            return Err(Error::Sequencing {
                expected: self.pushed,
                got: sample.frame,
            });
        }
        if !sample.value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at frame {}",
                sample.frame
            )));
        }
        let out = self.filter.push(sample.value)?;
        self.pushed += 1;
        Ok(self.label(out))
    }

    pub fn finalize(&mut self) -> Result<Vec<Sample>> {
        if self.finalized {
            return Err(Error::Finalized);
        }
        self.finalized = true;
        let out = if self.pushed == 0 {
            Vec::new()
        } else {
            self.filter.finish()?
        };
        let out = self.label(out);
        debug_assert_eq!(self.emitted, self.pushed);
        Ok(out)
    }

    fn label(&mut self, values: Vec<f64>) -> Vec<Sample> {
        let start = self.emitted;
        self.emitted += values.len();
        debug_assert!(self.emitted <= self.pushed);
        values
            .into_iter()
            .enumerate()
            .map(|(i, value)| Sample::new(start + i, value))
            .collect()
    }

    /// Streams a whole sequence through the session and finalizes it.
    pub fn run(mut self, values: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(values.len());
        for (frame, &value) in values.iter().enumerate() {
            out.extend(
                self.push(Sample::new(frame, value))?
                    .into_iter()
                    .map(|s| s.value),
            );
        }
        out.extend(self.finalize()?.into_iter().map(|s| s.value));
        Ok(out)
    }
}
