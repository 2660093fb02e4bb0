//! Argument parsing and dispatch.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iforge_core::bench::{BenchMethod, BenchmarkConfig};
use iforge_core::dgp::Dgp;
use iforge_core::intervals::Method;

use crate::commands::{self, usage, BenchmarkRun, CommandResult, PredictRun, SimulateRun};

#[derive(Debug, Parser)]
#[command(
    name = "iforge",
    version,
    about = "Prediction intervals for ReLU networks: simulations, benchmarks and predictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage study on a simulated process over a grid of T and p.
    Simulate(SimulateArgs),
    /// Repeated 90/10 split benchmark on a CSV dataset.
    Benchmark(BenchmarkArgs),
    /// Train (or load) a model and write per-point intervals.
    Predict(PredictArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DgpArg {
    Linear,
    Nonlinear,
}

impl From<DgpArg> for Dgp {
    fn from(d: DgpArg) -> Self {
        match d {
            DgpArg::Linear => Dgp::Linear,
            DgpArg::Nonlinear => Dgp::Nonlinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetScaling {
    /// Standardize the target for the nonlinear process only.
    Auto,
    Raw,
    Standardized,
}

fn method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: iforge_core::Error| e.to_string())
}

fn bench_method(s: &str) -> Result<BenchMethod, String> {
    s.parse().map_err(|e: iforge_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Base directory; each run writes to `<out>/<manifest hash>/`.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub dgp: DgpArg,
    /// Comma-separated interval methods.
    #[arg(long, value_delimiter = ',', value_parser = method, required = true)]
    pub method: Vec<Method>,
    /// Ensemble sizes or MC passes.
    #[arg(long = "T", value_delimiter = ',', default_value = "30")]
    pub t: Vec<usize>,
    /// Retention probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0.995")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.10")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 1200)]
    pub n_train: usize,
    #[arg(long, default_value_t = 300)]
    pub n_test: usize,
    #[arg(long, default_value_t = 20)]
    pub replications: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Hidden layer widths; defaults to 5 (linear) or 3,2 (nonlinear).
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum, default_value_t = TargetScaling::Auto)]
    pub target_scaling: TargetScaling,
    #[command(flatten)]
    pub out: OutArgs,
}

impl SimulateArgs {
    pub fn resolve(self) -> SimulateRun {
        let mut run = SimulateRun::standard(self.dgp.into(), self.method, self.t, self.p, self.seed);
        run.alphas = self.alpha;
        run.n_train = self.n_train;
        run.n_test = self.n_test;
        run.replications = self.replications;
        if let Some(h) = self.hidden {
            run.hidden_widths = h;
        }
        run.epochs = self.epochs.unwrap_or(run.epochs);
        run.batch_size = self.batch_size.unwrap_or(run.batch_size);
        run.learning_rate = self.lr.unwrap_or(run.learning_rate);
        match self.target_scaling {
            TargetScaling::Auto => {}
            TargetScaling::Raw => run.scale_target = false,
            TargetScaling::Standardized => run.scale_target = true,
        }
        run
    }
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Target column; defaults to the last one.
    #[arg(long)]
    pub target: Option<String>,
    /// extra_nn, mc_dropout or single.
    #[arg(long, value_parser = bench_method, default_value = "extra_nn")]
    pub method: BenchMethod,
    #[arg(long = "T", default_value_t = 5)]
    pub t: usize,
    /// Defaults to 20, or 5 for protein and 1 for Year MSD.
    #[arg(long)]
    pub splits: Option<usize>,
    /// Hidden units; defaults to 50, or 100 for protein and Year MSD.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub p: f64,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Permit Year-MSD-scale datasets.
    #[arg(long)]
    pub allow_huge: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

impl BenchmarkArgs {
    pub fn resolve(self) -> CommandResult<BenchmarkRun> {
        let (splits, width) = commands::benchmark_tier(&self.data);
        let mut bench = BenchmarkConfig::standard(self.method, self.t, self.seed);
        bench.n_splits = self.splits.unwrap_or(splits);
        bench.hidden_width = self.width.unwrap_or(width);
        bench.p = self.p;
        bench.epochs = self.epochs;
        bench.batch_size = self.batch_size;
        bench.learning_rate = self.lr;
        bench.train_fraction = self.train_fraction;
        BenchmarkRun::new(self.data, self.target, bench, self.allow_huge)
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Archive written by an earlier `predict` run.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Points to predict; defaults to --data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_parser = method, default_value = "extra_nn")]
    pub method: Method,
    #[arg(long = "T", default_value_t = 30)]
    pub t: usize,
    #[arg(long, default_value_t = 0.95)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.10")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write an SVG plot of the bands.
    #[arg(long)]
    pub plot: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

impl PredictArgs {
    pub fn resolve(self) -> PredictRun {
        PredictRun {
            data: self.data,
            archive: self.archive,
            test: self.test,
            input_sha256: Vec::new(),
            target: self.target,
            method: self.method,
            t: self.t,
            p: self.p,
            alphas: self.alpha,
            hidden_widths: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            seed: self.seed,
            plot: self.plot,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A `manifest.json` written by an earlier run.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn run(cli: Cli) -> CommandResult<PathBuf> {
    match cli.command {
        Command::Simulate(args) => {
            let out = args.out.out.clone();
            commands::run_simulate(args.resolve(), &out)
        }
        Command::Benchmark(args) => {
            let out = args.out.out.clone();
            commands::run_benchmark_command(args.resolve()?, &out)
        }
        Command::Predict(args) => {
            let out = args.out.out.clone();
            commands::run_predict(args.resolve(), &out)
        }
        Command::Replay(args) => {
            if !args.manifest.is_file() {
                return Err(usage(format!("{} does not exist", args.manifest.display())));
            }
            commands::replay(&args.manifest, &args.out.out)
        }
    }
}

/// Parse `args`, run, and map the outcome to the process exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.exit_code() == 2 {
                eprintln!("run `iforge --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
