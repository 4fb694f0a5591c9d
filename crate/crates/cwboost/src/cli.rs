//! Command-line interface: `train`, `predict`, `simulate` and `bench`.
//!
//! Exit status is 0 on success, 2 for invalid invocations (bad flags or
//! flag combinations, missing columns) and 1 for failures while running.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cwboost_core::basis::BasisKind;
use cwboost_core::binning::BinConfig;
use cwboost_core::boosting::{
    default_specs, train_acwb, train_cwb, train_hcwb, Algorithm, CategoricalEncoding, HybridFinish, Pool,
    TrainConfig,
};
use cwboost_core::data::{split, SplitSpec};
use cwboost_core::learner::{DfKind, LearnerOptions};
use cwboost_core::loss::Loss;
use cwboost_core::model::PredictType;
use cwboost_core::simulate::{simulate, SimConfig};

use crate::bench::{self, BenchConfig};
use crate::csv_io::{self, fmt_f64};
use crate::error::IoError;
use crate::model_file::{self, ModelFile};
use crate::report::{self, RunReport, Timing, REPORT_VERSION};
use crate::{alloc_counter, truth_file};

#[derive(Debug, Parser)]
#[command(name = "cwboost", version, about = "Componentwise gradient boosting with P-spline base learners")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a CSV file.
    Train(TrainArgs),
    /// Score a CSV file with a saved model.
    Predict(PredictArgs),
    /// Generate a synthetic dataset with known additive effects.
    Simulate(SimulateArgs),
    /// Time initialization and iterations over a grid of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Cwb,
    Acwb,
    Hcwb,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Cwb => Algorithm::Cwb,
            AlgoArg::Acwb => Algorithm::Acwb,
            AlgoArg::Hcwb => Algorithm::Hcwb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    L2,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FinishArg {
    SameSplit,
    FullData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Ridge,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DfKindArg {
    Df1,
    Df2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinnedArg {
    Yes,
    No,
    Both,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum, default_value = "cwb")]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value = "l2")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// Defaults to 0.0034 for acwb and 0.037 for hcwb.
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 5.0)]
    pub df: f64,
    #[arg(long, value_enum, default_value = "df1")]
    pub df_kind: DfKindArg,
    #[arg(long, default_value_t = 20)]
    pub knots: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Disable early stopping on the validation set.
    #[arg(long)]
    pub no_early_stop: bool,
    /// `sqrt`, `fourthroot`, `none` or a bin count.
    #[arg(long, default_value = "none")]
    pub bins: String,
    #[arg(long, default_value_t = 0.0)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Columns to read as categorical even when they look numeric.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
    #[arg(long, value_enum, default_value = "ridge")]
    pub encoding: EncodingArg,
    #[arg(long, value_enum, default_value = "same-split")]
    pub hybrid_finish: FinishArg,
    /// Use the last accelerated iterate instead of the momentum blend when
    /// computing pseudo residuals.
    #[arg(long)]
    pub no_blend: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (`row,link,response`); standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    /// Noise features relative to `p`: 0.5, 1, 2 or 5.
    #[arg(long, default_value_t = 1.0)]
    pub p_noise_rel: f64,
    /// Signal-to-noise ratio; `inf` gives noise-free responses.
    #[arg(long, default_value_t = 1.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the true effects as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000,100000")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub binned: BinnedArg,
    #[arg(long, value_enum, default_value = "cwb")]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write medians, ratios and fitted exponents as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::MissingTarget(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `args` (program name first) and runs the command; returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Runtime(anyhow!("thread pool: {e}")))
}

fn train_config(a: &TrainArgs) -> Result<(Algorithm, TrainConfig), Failure> {
    let algorithm: Algorithm = a.algo.into();
    if !(a.lr > 0.0 && a.lr <= 1.0) {
        return Err(usage(format!("--lr must be in (0, 1], got {}", a.lr)));
    }
    if !(0.0..1.0).contains(&a.val_frac) {
        return Err(usage(format!("--val-frac must be in [0, 1), got {}", a.val_frac)));
    }
    if algorithm == Algorithm::Hcwb && a.val_frac == 0.0 {
        return Err(usage("hcwb needs a validation set; pass --val-frac"));
    }
    let bins = model_file::parse_bins(&a.bins)
        .ok_or_else(|| usage(format!("--bins must be sqrt, fourthroot, none or a count, got '{}'", a.bins)))?;
    if bins == BinConfig::Fixed(0) {
        return Err(usage("--bins must be positive"));
    }
    let config = TrainConfig {
        loss: match a.loss {
            LossArg::L2 => Loss::SquaredError,
            LossArg::Bernoulli => Loss::Bernoulli,
        },
        learning_rate: a.lr,
        momentum: a.momentum.unwrap_or(algorithm.default_momentum()),
        max_iters: a.iters,
        patience: a.patience,
        early_stopping: !a.no_early_stop,
        learner: LearnerOptions {
            bins,
            df: a.df,
            df_kind: match a.df_kind {
                DfKindArg::Df1 => DfKind::Df1,
                DfKindArg::Df2 => DfKind::Df2,
            },
        },
        validation_fraction: a.val_frac,
        seed: a.seed,
        hybrid_finish: match a.hybrid_finish {
            FinishArg::SameSplit => HybridFinish::SameSplit,
            FinishArg::FullData => HybridFinish::FullData,
        },
        momentum_blend: !a.no_blend,
        parallel: a.threads != 1,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    if a.df.is_nan() || a.df <= 0.0 {
        return Err(usage(format!("--df must be positive, got {}", a.df)));
    }
    Ok((algorithm, config))
}

fn train(a: TrainArgs) -> Result<(), Failure> {
    let (algorithm, config) = train_config(&a)?;
    let pool_threads = thread_pool(a.threads)?;
    let data = csv_io::read_dataset(&a.data, &a.target, &a.categorical)?;
    let (train_set, valid) = if config.validation_fraction > 0.0 {
        let (t, v) = split(&data, SplitSpec { validation_fraction: config.validation_fraction, seed: config.seed })
            .map_err(|e| usage(e.to_string()))?;
        (t, Some(v))
    } else {
        (data, None)
    };
    let spline = BasisKind::PSpline { degree: a.degree, n_knots: a.knots };
    let encoding = match a.encoding {
        EncodingArg::Ridge => CategoricalEncoding::Ridge,
        EncodingArg::Binary => CategoricalEncoding::Binary,
    };
    let specs = default_specs(&train_set, spline, encoding);
    if specs.is_empty() {
        return Err(usage("no usable feature columns"));
    }

    let (pool, out, timing, peak) = pool_threads.install(|| -> anyhow::Result<_> {
        let base = alloc_counter::reset_peak();
        let t0 = Instant::now();
        let pool = Pool::build(&train_set, &specs, None, config.learner).context("building base learners")?;
        let init_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let out = match algorithm {
            Algorithm::Cwb => train_cwb(&pool, &train_set, valid.as_ref(), &config),
            Algorithm::Acwb => train_acwb(&pool, &train_set, valid.as_ref(), &config),
            Algorithm::Hcwb => train_hcwb(&pool, &train_set, valid.as_ref().expect("validated"), &config),
        }
        .context("training")?;
        let iterations_seconds = t1.elapsed().as_secs_f64();
        let timing = Timing {
            init_seconds,
            iterations_seconds,
            per_iteration_seconds: iterations_seconds / out.log.iterations().max(1) as f64,
        };
        Ok((pool, out, timing, alloc_counter::peak_since(base)))
    })?;

    let file = ModelFile { model: out.model, target: a.target.clone() };
    model_file::save(&file, &a.out)?;
    let summary = &file.model.summary;
    if let Some(path) = &a.report {
        let rep = RunReport {
            version: REPORT_VERSION.into(),
            algorithm: algorithm.name().into(),
            n_train: train_set.n_rows(),
            n_validation: valid.as_ref().map_or(0, |v| v.n_rows()),
            timing,
            peak_alloc_bytes: peak,
            iterations: out.log.iterations(),
            best_iteration: summary.best_iteration,
            switch_iteration: summary.switch_iteration,
            stop_iteration: summary.stop_iteration,
            final_train_risk: summary.train_risk,
            final_val_risk: summary.val_risk,
            histogram: report::histogram(&pool, &out.log),
            binning: report::binning_notes(&pool),
            selections: out.log.selections(),
        };
        let text = serde_json::to_string_pretty(&rep).map_err(|e| Failure::Runtime(e.into()))? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    for note in report::binning_notes(&pool).iter().filter(|n| n.clamped) {
        eprintln!("note: {} uses {} bins ({} requested, limited by distinct values)", note.feature, note.used, note.requested);
    }
    println!(
        "{}: {} iterations, best {}, train risk {}{}",
        algorithm.name(),
        summary.iterations,
        summary.best_iteration,
        summary.train_risk,
        summary.val_risk.map(|v| format!(", validation risk {v}")).unwrap_or_default()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<(), Failure> {
    let file = model_file::load(&a.model).map_err(|e| Failure::Runtime(e.into()))?;
    let model = &file.model;
    let categorical: Vec<String> = model
        .terms
        .iter()
        .filter(|t| t.basis.is_categorical())
        .map(|t| t.spec.feature.clone())
        .collect();
    let data = csv_io::read_features(&a.data, Some(&file.target), &categorical)?;
    model.check_columns(&data).map_err(|e| usage(e.to_string()))?;
    let link = model.predict(&data, PredictType::Link).map_err(|e| usage(e.to_string()))?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    write_predictions(sink, &link, model.loss).map_err(Failure::Runtime)
}

fn write_predictions(sink: impl Write, link: &[f64], loss: Loss) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["row", "link", "response"])?;
    for (i, &f) in link.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(f), fmt_f64(loss.response(f))])?;
    }
    w.flush()?;
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<(), Failure> {
    let config = SimConfig { n: a.n, p: a.p, p_noise_rel: a.p_noise_rel, snr: a.snr, seed: a.seed };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let (data, truth) = simulate(&config).map_err(|e| Failure::Runtime(e.into()))?;
    csv_io::write_dataset(&data, &a.out)?;
    if let Some(path) = &a.truth {
        truth_file::save(&truth, path)?;
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<(), Failure> {
    if a.n.is_empty() || a.k.is_empty() || a.n.iter().chain(&a.k).any(|&v| v == 0) {
        return Err(usage("--n and --k need positive values"));
    }
    if a.iters == 0 || a.reps == 0 {
        return Err(usage("--iters and --reps must be positive"));
    }
    let config = BenchConfig {
        ns: a.n.clone(),
        ks: a.k.clone(),
        binned: match a.binned {
            BinnedArg::Yes => vec![true],
            BinnedArg::No => vec![false],
            BinnedArg::Both => vec![true, false],
        },
        iters: a.iters,
        reps: a.reps,
        seed: a.seed,
        algorithm: a.algo.into(),
        parallel: a.threads != 1,
    };
    let pool_threads = thread_pool(a.threads)?;
    let rows = pool_threads.install(|| {
        bench::run(&config, |r| {
            eprintln!(
                "n={} K={} binned={} rep={} {}: {:.6}s",
                r.n, r.k, r.binned, r.rep, r.phase, r.seconds
            )
        })
    })?;
    bench::write_rows(&rows, &a.out)?;
    let summary = bench::summarize(&rows);
    for r in &summary.ratios {
        println!("n={} K={} {}: binned/unbinned time {:.3}", r.n, r.k, r.phase, r.ratio);
    }
    for e in &summary.exponents {
        let ci = match (e.ci_low, e.ci_high) {
            (Some(lo), Some(hi)) => format!(" (95% CI {lo:.3} to {hi:.3})"),
            _ => String::new(),
        };
        let b = if e.binned { "binned" } else { "unbinned" };
        println!("{b} {} time ~ {}^{:.3}{ci}", e.phase, e.variable, e.estimate);
    }
    if let Some(path) = &a.summary {
        write_json(path, &summary)?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.into()))? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
