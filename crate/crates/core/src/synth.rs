//! Seeded ground-truth camera paths and noise.
//!
//! Paths are chains of static, linear and parabolic segments. Values are
//! continuous at every join; a parabolic segment starts with the slope of the
//! segment before it and ends with the slope of the one after it.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`) seeded with a `u64`, so a
//! seed reproduces the same corpus on every platform.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TrajectoryStream;

pub const MIN_SEGMENT: usize = 16;
pub const MIN_TOTAL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Static,
    Linear,
    Parabolic,
}

/// One segment. `rate` is the slope of a linear segment and the final slope of
/// a parabolic one; static segments ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub duration: usize,
    #[serde(default)]
    pub rate: f64,
}

impl SegmentSpec {
    pub fn stat(duration: usize) -> Self {
        Self {
            kind: SegmentKind::Static,
            duration,
            rate: 0.0,
        }
    }

    pub fn linear(duration: usize, slope: f64) -> Self {
        Self {
            kind: SegmentKind::Linear,
            duration,
            rate: slope,
        }
    }

    pub fn parabolic(duration: usize, end_slope: f64) -> Self {
        Self {
            kind: SegmentKind::Parabolic,
            duration,
            rate: end_slope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub kind: SegmentKind,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub values: Vec<f64>,
    pub segments: Vec<SegmentMeta>,
}

pub fn generate_gt(start_value: f64, specs: &[SegmentSpec]) -> Result<GroundTruth> {
    if !start_value.is_finite() {
        return Err(Error::InvalidParameter("start value must be finite".into()));
    }
    let total: usize = specs.iter().map(|s| s.duration).sum();
    if total < MIN_TOTAL {
        return Err(Error::InvalidParameter(format!(
            "total duration {total} < {MIN_TOTAL}"
        )));
    }
    let mut values = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(specs.len());
    let mut v = start_value;
    let mut slope = 0.0;
    for (i, s) in specs.iter().enumerate() {
        if s.duration < MIN_SEGMENT {
            return Err(Error::InvalidParameter(format!(
                "segment {i} lasts {} frames (< {MIN_SEGMENT})",
                s.duration
            )));
        }
        if !s.rate.is_finite() {
            return Err(Error::InvalidParameter(format!("segment {i} has a non-finite rate")));
        }
        segments.push(SegmentMeta {
            kind: s.kind,
            start: values.len(),
            len: s.duration,
        });
        let d = s.duration as f64;
        match s.kind {
            SegmentKind::Static => {
                values.extend(std::iter::repeat_n(v, s.duration));
                slope = 0.0;
            }
            SegmentKind::Linear => {
                values.extend((1..=s.duration).map(|k| v + s.rate * k as f64));
                v += s.rate * d;
                slope = s.rate;
            }
            SegmentKind::Parabolic => {
                let curv = (s.rate - slope) / d;
                values.extend((1..=s.duration).map(|k| {
                    let k = k as f64;
                    v + slope * k + 0.5 * curv * k * k
                }));
                v += slope * d + 0.5 * curv * d * d;
                slope = s.rate;
            }
        }
    }
    Ok(GroundTruth { values, segments })
}

/// Random segment sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub p_static: f64,
    pub p_linear: f64,
    pub p_parabolic: f64,
    /// Inclusive duration range of static segments.
    pub static_duration: (usize, usize),
    /// Inclusive duration range of linear and parabolic segments.
    pub move_duration: (usize, usize),
    /// Slope magnitudes are drawn uniformly from this range (units per frame).
    pub slope: (f64, f64),
    pub start_value: (f64, f64),
    /// Start and end every path with a static segment.
    pub static_ends: bool,
    /// Build hold / ease-in / cruise / ease-out cycles instead of drawing
    /// kinds independently. Cruises are linear with probability
    /// `p_linear / (p_linear + p_parabolic)`, otherwise skipped.
    pub eased: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            p_static: 0.40,
            p_linear: 0.35,
            p_parabolic: 0.25,
            static_duration: (32, 160),
            move_duration: (32, 160),
            slope: (0.5, 4.0),
            start_value: (-200.0, 200.0),
            static_ends: false,
            eased: false,
        }
    }
}

impl SamplerConfig {
    /// Long holds between moves, as used by the residual-motion benchmark.
    pub fn benchmark() -> Self {
        Self {
            static_duration: (192, 384),
            static_ends: true,
            eased: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ps = [self.p_static, self.p_linear, self.p_parabolic];
        if ps.iter().any(|p| !(*p >= 0.0)) || ps.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("segment probabilities must be >= 0 and not all zero".into()));
        }
        for (name, (lo, hi)) in [("static_duration", self.static_duration), ("move_duration", self.move_duration)] {
            if lo < MIN_SEGMENT || hi < lo {
                return Err(Error::InvalidParameter(format!(
                    "{name} must satisfy {MIN_SEGMENT} <= lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        let (a, b) = self.slope;
        if !(a >= 0.0 && b >= a && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad slope range ({a}, {b})")));
        }
        let (a, b) = self.start_value;
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(Error::InvalidParameter(format!("bad start range ({a}, {b})")));
        }
        Ok(())
    }

    fn kind(&self, rng: &mut impl Rng) -> SegmentKind {
        let total = self.p_static + self.p_linear + self.p_parabolic;
        let u = rng.random::<f64>() * total;
        if u < self.p_static {
            SegmentKind::Static
        } else if u < self.p_static + self.p_linear {
            SegmentKind::Linear
        } else {
            SegmentKind::Parabolic
        }
    }

    fn slope(&self, rng: &mut impl Rng) -> f64 {
        let mag = uniform(rng, self.slope.0, self.slope.1);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    }

    /// Draws segments covering at least `length` frames plus a start value.
    pub fn sample(&self, length: usize, rng: &mut impl Rng) -> Result<(f64, Vec<SegmentSpec>)> {
        self.validate()?;
        if length < MIN_TOTAL {
            return Err(Error::InvalidParameter(format!("length {length} < {MIN_TOTAL}")));
        }
        let start = uniform(rng, self.start_value.0, self.start_value.1);
        if self.eased {
            return Ok((start, self.sample_eased(length, rng)));
        }
        let mut kinds = Vec::new();
        let mut durations = Vec::new();
        let mut total = 0;
        while total < length {
            let kind = if self.static_ends && kinds.is_empty() {
                SegmentKind::Static
            } else {
                self.kind(rng)
            };
            let (lo, hi) = match kind {
                SegmentKind::Static => self.static_duration,
                _ => self.move_duration,
            };
            let d = rng.random_range(lo..=hi);
            kinds.push(kind);
            durations.push(d);
            total += d;
        }
        if self.static_ends && kinds.last() != Some(&SegmentKind::Static) {
            kinds.push(SegmentKind::Static);
            durations.push(self.static_duration.0);
        }

        // linear slopes first, then parabolic end slopes from their successors
        let mut rates: Vec<f64> = kinds
            .iter()
            .map(|k| match k {
                SegmentKind::Linear => self.slope(rng),
                _ => 0.0,
            })
            .collect();
        for i in (0..kinds.len()).rev() {
            if kinds[i] != SegmentKind::Parabolic {
                continue;
            }
            let before = if i == 0 { 0.0 } else { rates[i - 1] };
            let after = match kinds.get(i + 1) {
                Some(SegmentKind::Parabolic) | None => self.slope(rng),
                Some(_) => rates[i + 1],
            };
            // a ramp between two holds would be flat: give it somewhere to go
            rates[i] = if after == 0.0 && before == 0.0 {
                self.slope(rng)
            } else {
                after
            };
        }
        let specs = kinds
            .into_iter()
            .zip(durations)
            .zip(rates)
            .map(|((kind, duration), rate)| SegmentSpec { kind, duration, rate })
            .collect();
        Ok((start, specs))
    }
}

impl SamplerConfig {
    fn sample_eased(&self, length: usize, rng: &mut impl Rng) -> Vec<SegmentSpec> {
        let hold = |rng: &mut dyn rand::RngCore| {
            SegmentSpec::stat(rng.random_range(self.static_duration.0..=self.static_duration.1))
        };
        let mut specs = vec![hold(rng)];
        let mut total = specs[0].duration;
        let p_cruise = self.p_linear / (self.p_linear + self.p_parabolic).max(f64::MIN_POSITIVE);
        while total < length {
            let slope = self.slope(rng);
            let (lo, hi) = self.move_duration;
            specs.push(SegmentSpec::parabolic(rng.random_range(lo..=hi), slope));
            if rng.random::<f64>() < p_cruise {
                specs.push(SegmentSpec::linear(rng.random_range(lo..=hi), slope));
            }
            specs.push(SegmentSpec::parabolic(rng.random_range(lo..=hi), 0.0));
            specs.push(hold(rng));
            total = specs.iter().map(|s| s.duration).sum();
        }
        specs
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Samples a path of at least `length` frames. It is cut to exactly `length`
/// unless the sampler asks for static ends, which keeps the final hold whole.
pub fn random_gt(sampler: &SamplerConfig, length: usize, seed: u64) -> Result<GroundTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (start, specs) = sampler.sample(length, &mut rng)?;
    let mut gt = generate_gt(start, &specs)?;
    if !sampler.static_ends {
        gt.values.truncate(length);
        gt.segments.retain(|s| s.start < length);
        if let Some(last) = gt.segments.last_mut() {
            last.len = last.len.min(length - last.start);
        }
    }
    Ok(gt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub gaussian_sigma: f64,
    pub outlier_prob: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            gaussian_sigma: 0.5,
            outlier_prob: 0.0,
            outlier_scale: 10.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            gaussian_sigma: sigma,
            outlier_prob: 0.0,
            outlier_scale: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(Error::InvalidParameter("gaussian_sigma must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::InvalidParameter("outlier_prob must lie in [0, 1]".into()));
        }
        if !(self.outlier_scale >= 0.0 && self.outlier_scale.is_finite()) {
            return Err(Error::InvalidParameter("outlier_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// `gt` plus i.i.d. Gaussian noise and, with probability `outlier_prob`, an
/// impulse of size `U(1, outlier_scale) * sigma` with random sign.
pub fn add_noise(gt: &[f64], noise: &NoiseSpec) -> Result<Vec<f64>> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.gaussian_sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let (lo, hi) = if noise.outlier_scale >= 1.0 {
        (1.0, noise.outlier_scale)
    } else {
        (noise.outlier_scale, 1.0)
    };
    Ok(gt
        .iter()
        .map(|&g| {
            let mut v = g + normal.sample(&mut rng);
            if noise.outlier_prob > 0.0 && rng.random::<f64>() < noise.outlier_prob {
                let mag = uniform(&mut rng, lo, hi) * noise.gaussian_sigma;
                v += if rng.random::<bool>() { mag } else { -mag };
            }
            v
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub seed: u64,
    pub gt: GroundTruth,
    pub noisy: Vec<f64>,
}

/// `count` noisy/clean pairs. Item seeds are drawn from a ChaCha8 stream keyed
/// by `seed`; the noise of each item is seeded independently of its path.
pub fn generate_corpus(
    count: usize,
    length: usize,
    seed: u64,
    sampler: &SamplerConfig,
    noise: &NoiseSpec,
) -> Result<Vec<CorpusItem>> {
    if count == 0 {
        return Err(Error::InvalidParameter("corpus count must be >= 1".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let item_seed = master.next_u64();
            let noise_seed = master.next_u64();
            let gt = random_gt(sampler, length, item_seed)?;
            let noisy = add_noise(
                &gt.values,
                &NoiseSpec {
                    seed: noise_seed,
                    ..*noise
                },
            )?;
            Ok(CorpusItem {
                seed: item_seed,
                gt,
                noisy,
            })
        })
        .collect()
}

/// The fixed evaluation set: holds of at least 128 frames, Gaussian noise.
pub fn benchmark_suite(count: usize, length: usize, sigma: f64, seed: u64) -> Result<Vec<CorpusItem>> {
    generate_corpus(
        count,
        length,
        seed,
        &SamplerConfig::benchmark(),
        &NoiseSpec::gaussian(sigma, 0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub noisy: PathBuf,
    pub gt: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub seed: u64,
    pub count: usize,
    pub length: usize,
    pub noise: NoiseSpec,
    pub sampler: SamplerConfig,
    /// Paths relative to the manifest's directory.
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl CorpusManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("corpus manifest: {e}")))
    }

    /// Loads every (noisy, gt) pair listed in the manifest at `path`.
    pub fn load_items(&self, path: impl AsRef<Path>) -> Result<Vec<(TrajectoryStream, TrajectoryStream)>> {
        let dir = path.as_ref().parent().unwrap_or(Path::new("."));
        self.files
            .iter()
            .map(|f| {
                Ok((
                    TrajectoryStream::load(dir.join(&f.noisy))?,
                    TrajectoryStream::load(dir.join(&f.gt))?,
                ))
            })
            .collect()
    }
}

/// Writes a corpus as paired CSVs plus `manifest.json` into `dir` and returns
/// the manifest path.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    count: usize,
    length: usize,
    seed: u64,
    sampler: &SamplerConfig,
    noise: &NoiseSpec,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let items = generate_corpus(count, length, seed, sampler, noise)?;
    let mut files = Vec::with_capacity(count);
    for (i, item) in items.iter().enumerate() {
        let entry = ManifestEntry {
            noisy: PathBuf::from(format!("item_{i:05}_noisy.csv")),
            gt: PathBuf::from(format!("item_{i:05}_gt.csv")),
        };
        TrajectoryStream::from_values(&item.noisy).save(dir.join(&entry.noisy))?;
        TrajectoryStream::from_values(&item.gt.values).save(dir.join(&entry.gt))?;
        files.push(entry);
    }
    let manifest = CorpusManifest {
        seed,
        count,
        length,
        noise: *noise,
        sampler: *sampler,
        files,
    };
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
