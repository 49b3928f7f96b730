use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cinefilter::bench::{sweep, worker_count, BenchReport, SweepSpec};
use cinefilter::config::Config;
use cinefilter::metrics::{evaluate, EvalReport};
use cinefilter::neuro::{default_tv_lam, make_windows, train as train_model, FrontEndSpec, Weights};
use cinefilter::offline::{offline_optimize, OfflineProblem};
use cinefilter::synth::{benchmark_suite, write_corpus, CorpusManifest, NoiseSpec, SamplerConfig};
use cinefilter::trajectory::{FilterKind, TrajectoryStream};
use cinefilter::Error;

use crate::plot::write_svg;
use crate::{BenchArgs, EvalArgs, FilterArgs, MakeGtArgs, SynthArgs, TrainArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters.
    Usage(String),
    Core(Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(Error::InvalidParameter(_) | Error::MissingWeights(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

fn with_path<T>(path: &Path, r: cinefilter::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        Error::Io(io) => CliError::Core(Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        ))),
        other => CliError::Core(other),
    })
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<Config, CliError> {
    let mut config = match path {
        Some(p) => Config::load(p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?,
        None => Config::default(),
    };
    config
        .apply_overrides(overrides)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

pub fn synth(config: &Config, a: SynthArgs) -> Result<(), CliError> {
    let sampler = if a.benchmark {
        SamplerConfig::benchmark()
    } else {
        SamplerConfig::default()
    };
    let seed = a.seed.unwrap_or(config.seed);
    let noise = NoiseSpec {
        gaussian_sigma: a.sigma,
        outlier_prob: a.outlier_prob,
        outlier_scale: a.outlier_scale,
        seed,
    };
    let manifest = with_path(&a.out, write_corpus(&a.out, a.count, a.length, seed, &sampler, &noise))?;
    println!("{}", manifest.display());
    Ok(())
}

fn weights_for(config: &Config, explicit: Option<&PathBuf>, kind: FilterKind) -> Result<Option<Arc<Weights>>, CliError> {
    if kind != FilterKind::CineCnn {
        return Ok(None);
    }
    match explicit.or(config.cnn.weights.as_ref()) {
        Some(p) => Ok(Some(Arc::new(with_path(p, Weights::load(p))?))),
        None => Err(Error::MissingWeights("cinecnn needs --weights or cnn.weights".into()).into()),
    }
}

pub fn filter(config: &Config, a: FilterArgs) -> Result<(), CliError> {
    let kind = a.filter.unwrap_or(config.filter);
    let weights = weights_for(config, a.weights.as_ref(), kind)?;
    let input = with_path(&a.input, TrajectoryStream::load(&a.input))?;
    let x = input.values();
    let y = config.session(kind, weights.as_ref())?.run(&x)?;
    with_path(&a.output, TrajectoryStream::from_values(&y).save(&a.output))?;
    if let Some(p) = &a.emit_raw {
        let mut w = BufWriter::new(File::create(p)?);
        writeln!(w, "frame,input,output")?;
        for (i, (xi, yi)) in x.iter().zip(&y).enumerate() {
            writeln!(w, "{i},{xi},{yi}")?;
        }
        w.flush()?;
    }
    if let Some(p) = &a.svg {
        std::fs::write(p, write_svg(&x, &y))?;
    }
    log::info!("{kind}: {} frames", y.len());
    Ok(())
}

pub fn train(config: &Config, a: TrainArgs) -> Result<(), CliError> {
    let mut tc = config.train.clone();
    if let Some(e) = a.epochs {
        tc.epochs = e;
    }
    if let Some(s) = a.seed {
        tc.seed = s;
    }
    tc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = with_path(&a.manifest, CorpusManifest::load(&a.manifest))?;
    let items = with_path(&a.manifest, manifest.load_items(&a.manifest))?;
    let streams: Vec<TrajectoryStream> = items.into_iter().map(|(noisy, _)| noisy).collect();

    let future = config.cnn.window.future;
    let tv_lam = match config.cnn.tv_lam {
        Some(l) => l,
        None => default_tv_lam(&config.lambdas()?),
    };
    let windows = make_windows(&streams, tc.window_len, tc.stride, future, tv_lam)?;
    if windows.is_empty() {
        return Err(Error::Empty("training windows (streams shorter than train.window_len?)").into());
    }
    log::info!("training on {} windows", windows.len());
    let outcome = train_model(&windows, &tc)?;
    let weights = Weights {
        model: outcome.model,
        front_end: FrontEndSpec { tv_lam, future },
    };
    with_path(&a.out, weights.save(&a.out))?;

    let history = a.history.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".history.csv");
        PathBuf::from(p)
    });
    let mut w = BufWriter::new(File::create(&history)?);
    writeln!(w, "epoch,train_loss,val_loss,lr")?;
    for e in &outcome.history {
        writeln!(w, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.lr)?;
    }
    w.flush()?;
    println!("{}", a.out.display());
    println!("best epoch {} of {}", outcome.best_epoch, outcome.history.len());
    Ok(())
}

fn print_report(r: &EvalReport) {
    let rows = [
        ("precision_sum", format!("{:.6}", r.precision_sum)),
        ("precision_mean", format!("{:.6}", r.precision_mean)),
        ("smoothness_sum", format!("{:.6}", r.smoothness_sum)),
        ("smoothness_mean", format!("{:.6}", r.smoothness_mean)),
        ("residual_motion", format!("{:.6}", r.residual_motion)),
        ("residual_slopes", r.residual_slopes.to_string()),
        ("n_frames", r.n_frames.to_string()),
    ];
    for (k, v) in rows {
        println!("{k:<16} {v:>14}");
    }
    if r.residual_slopes == 0 {
        println!("(no static run of at least 128 frames in the ground truth)");
    }
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let y = with_path(&a.pred, TrajectoryStream::load(&a.pred))?.values();
    let gt = with_path(&a.gt, TrajectoryStream::load(&a.gt))?.values();
    let report = evaluate(&y, &gt)?;
    print_report(&report);
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    if let Some(p) = &a.json {
        std::fs::write(p, &json)?;
    }
    println!("{json}");
    Ok(())
}

pub fn bench(config: &Config, a: BenchArgs) -> Result<(), CliError> {
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes must be positive".into()));
    }
    let suite = benchmark_suite(a.count, a.length, a.sigma, a.seed)?;
    let threads = worker_count();
    let spec = SweepSpec {
        sizes: &a.sizes,
        suite: &suite,
        fps_stream: &suite[0].noisy,
        fps_reps: a.reps,
        threads,
    };
    log::info!("bench on {} sequences, {threads} worker(s)", suite.len());
    let mut reports: Vec<BenchReport> = Vec::new();
    for &kind in &a.filters {
        let weights = weights_for(config, a.weights.as_ref(), kind)?;
        reports.push(sweep(config, kind, weights.as_ref(), &spec)?);
    }
    let markdown: String = reports.iter().map(|r| r.markdown() + "\n").collect();
    print!("{markdown}");
    if let Some(p) = &a.markdown {
        std::fs::write(p, &markdown)?;
    }
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&reports).map_err(Error::from)?)?;
    }
    Ok(())
}

pub fn make_gt(config: &Config, a: MakeGtArgs) -> Result<(), CliError> {
    let x = with_path(&a.input, TrajectoryStream::load(&a.input))?.values();
    let y = offline_optimize(&OfflineProblem {
        x,
        lambdas: config.lambdas()?,
        params: config.solver,
    })?;
    let out = a.output.unwrap_or_else(|| {
        let stem = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        a.input.with_file_name(format!("{stem}_gt.csv"))
    });
    with_path(&out, TrajectoryStream::from_values(&y).save(&out))?;
    println!("{}", out.display());
    Ok(())
}
