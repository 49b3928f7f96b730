mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use cinefilter::trajectory::FilterKind;
use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "cinefilter", version, about = "Online smoothing of noisy camera trajectories")]
struct Cli {
    /// JSON config file; missing sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config field by dotted path, e.g. `--set window.future=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus of noisy/ground-truth CSV pairs.
    Synth(SynthArgs),
    /// Run a filter over a `frame,value` CSV.
    Filter(FilterArgs),
    /// Train CineCNN weights on a synthetic corpus.
    Train(TrainArgs),
    /// Compare a filtered CSV against ground truth.
    Eval(EvalArgs),
    /// Sweep window sizes on a synthetic benchmark.
    Bench(BenchArgs),
    /// Write offline-optimized pseudo ground truth for a CSV.
    MakeGt(MakeGtArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 512)]
    length: usize,
    /// Defaults to the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    outlier_prob: f64,
    #[arg(long, default_value_t = 10.0)]
    outlier_scale: f64,
    /// Use the benchmark sampler (long holds, eased moves).
    #[arg(long)]
    benchmark: bool,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Defaults to the config's `filter`.
    #[arg(long)]
    filter: Option<FilterKind>,
    /// CineCNN weights; overrides `cnn.weights`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Also write `frame,input,output` for plotting.
    #[arg(long, value_name = "PATH")]
    emit_raw: Option<PathBuf>,
    /// Also write an SVG with both curves.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Corpus manifest written by `synth`.
    #[arg(long)]
    manifest: PathBuf,
    /// Weights JSON to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Overrides `train.epochs`.
    #[arg(long)]
    epochs: Option<usize>,
    /// Overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Write the report as JSON here as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Filters to sweep.
    #[arg(long, value_delimiter = ',', default_value = "cineconvex")]
    filters: Vec<FilterKind>,
    /// Window sizes for p and f.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 1024)]
    length: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Timed runs per cell.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Write all reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the markdown tables.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MakeGtArgs {
    #[arg(long)]
    input: PathBuf,
    /// Defaults to `<input stem>_gt.csv` next to the input.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = commands::load_config(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Synth(a) => commands::synth(&config, a),
        Command::Filter(a) => commands::filter(&config, a),
        Command::Train(a) => commands::train(&config, a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(&config, a),
        Command::MakeGt(a) => commands::make_gt(&config, a),
    }
}
