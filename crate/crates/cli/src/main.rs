//! Command-line harness for the tensor-weight RBF classifiers.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qrbf::dataset::{generate, load_csv, save_csv, PatternFamily, PatternSpec};
use qrbf::experiment::{
    comparison_txt, decision_grid, grid_csv, metrics_csv, mse, parse_theta_file, rcp, rcp_of,
    run_experiment, run_on_data, scores, sweep_csv, sweep_m, write_report, Bounds, ExperimentConfig,
    ExperimentMethod, ExperimentReport, SeedOutcome,
};
use qrbf::train::{Scorer, TensorClassifier};
use qrbf::{KernelModel, TensorWeights};

#[derive(Parser, Debug)]
#[command(name = "qrbf", version, about = "Tensor-product-weight RBF classifiers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic pattern and save it as CSV.
    Gen(GenArgs),
    /// Train one method over a list of seeds and write report files.
    Train(TrainArgs),
    /// Score saved angles against a training set and a test set.
    Eval(EvalArgs),
    /// Average metrics for each m with 2^m samples.
    Sweep(SweepArgs),
    /// Train on one seed and export decision values over a grid.
    Grid(GridArgs),
    /// Run several methods on the same seeds and tabulate them.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value = "blobs")]
    pattern: PatternFamily,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

/// Flags shared by the experiment subcommands. Each maps onto a config key;
/// a `--config` file is applied afterwards and overrides them.
#[derive(Args, Debug, Default)]
struct ExperimentFlags {
    /// Plain-text `key = value` file applied after the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    /// One seed; `--seeds` takes precedence.
    #[arg(long)]
    seed: Option<String>,
    /// `a..b` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    grad_tol: Option<String>,
    #[arg(long)]
    damping: Option<String>,
    /// `true` for unit-norm feature states, `false` for raw features.
    #[arg(long)]
    normalize: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    #[arg(long)]
    svm_iters: Option<String>,
    #[arg(long)]
    kernel_trick: Option<String>,
    /// Include wall-clock seconds in the output files.
    #[arg(long)]
    timings: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl ExperimentFlags {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let pairs = [
            ("pattern", &self.pattern),
            ("samples", &self.samples),
            ("noise", &self.noise),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("method", &self.method),
            ("learning_rate", &self.learning_rate),
            ("max_iters", &self.max_iters),
            ("grad_tol", &self.grad_tol),
            ("damping", &self.damping),
            ("normalize", &self.normalize),
            ("ridge", &self.ridge),
            ("svm_iters", &self.svm_iters),
            ("kernel_trick", &self.kernel_trick),
            ("out", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        cfg.timings = self.timings;
        if let Some(path) = &self.config {
            cfg.apply_file(path).with_context(|| format!("reading config {}", path.display()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    match &cfg.output {
        Some(p) => Ok(p),
        None => bail!("an output directory is required (--out or `out =` in the config)"),
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    flags: ExperimentFlags,
    /// Train on this CSV instead of generated patterns (uses the first seed).
    #[arg(long, requires = "test")]
    data: Option<PathBuf>,
    /// Test CSV for the INF metric when `--data` is given.
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Training CSV whose samples are the kernel centers.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// `theta.txt` written by `train`.
    #[arg(long)]
    theta: PathBuf,
    /// Which seed's angles to use; defaults to the first line.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    normalize: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    flags: ExperimentFlags,
    #[arg(long, default_value_t = 4)]
    m_min: usize,
    #[arg(long, default_value_t = 10)]
    m_max: usize,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    flags: ExperimentFlags,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    y_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    y_max: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    flags: ExperimentFlags,
    /// Comma-separated method tags; all methods by default.
    #[arg(long)]
    methods: Option<String>,
}

fn gen(args: &GenArgs) -> Result<()> {
    let ds = generate(&PatternSpec::new(args.pattern, args.samples, args.noise, args.seed))?;
    save_csv(&ds, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} samples to {}", ds.len(), args.out.display());
    Ok(())
}

fn summarize(report: &ExperimentReport) {
    for (seed, err) in report.failures() {
        eprintln!("seed {seed} failed: {err}");
    }
    match report.mean() {
        Some(m) => println!(
            "{} on {}: RCP {:.4}  MSE {:.4e}  INF {:.4}",
            report.config.method,
            report.config.pattern.family.name(),
            m.rcp,
            m.mse,
            m.inf
        ),
        None => println!("{}: every seed failed", report.config.method),
    }
}

fn train(args: &TrainArgs) -> Result<()> {
    let cfg = args.flags.config()?;
    let dir = out_dir(&cfg)?;
    let report = match (&args.data, &args.test) {
        (Some(data), Some(test)) => {
            let train = load_csv(data)?;
            let test = load_csv(test)?;
            let seed = cfg.seeds[0];
            let run = run_on_data(&cfg, &train, &test, seed).map_err(|e| e.to_string());
            ExperimentReport { config: ExperimentConfig { seeds: vec![seed], ..cfg.clone() }, runs: vec![SeedOutcome { seed, result: run }] }
        }
        _ => run_experiment(&cfg)?,
    };
    write_report(dir, &report)?;
    summarize(&report);
    if report.mean().is_none() {
        bail!("no seed trained successfully");
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let train = load_csv(&args.data)?;
    let test = load_csv(&args.test)?;
    let text = fs::read_to_string(&args.theta).with_context(|| format!("reading {}", args.theta.display()))?;
    let all = parse_theta_file(&args.theta, &text)?;
    let theta = match args.seed {
        Some(seed) => all.into_iter().find(|(s, _)| *s == seed).map(|(_, t)| t),
        None => all.into_iter().next().map(|(_, t)| t),
    }
    .context("no matching angles in the theta file")?;
    let model = KernelModel::fit(&train)?;
    let weights = TensorWeights::new(theta)?;
    if weights.dim() != model.len() {
        bail!("{} angles need {} training samples, got {}", weights.len(), weights.dim(), model.len());
    }
    let clf = TensorClassifier { model: &model, weights, normalize_features: args.normalize };
    let train_scores = scores(&clf, &train)?;
    let labels = train.labels();
    println!("RCP = {:.4}", rcp(&train_scores, &labels)?);
    println!("MSE = {:.4e}", mse(&train_scores, &labels)?);
    println!("INF = {:.4}", rcp_of(&clf as &dyn Scorer, &test)?);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.flags.config()?;
    let dir = out_dir(&cfg)?;
    let rows = sweep_m(&cfg, args.m_min..=args.m_max)?;
    let csv = sweep_csv(&rows, cfg.timings);
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), &csv)?;
    let mut txt = format!("sweep of {} on {} over m = {}..={}\n\n", cfg.method, cfg.pattern.family.name(), args.m_min, args.m_max);
    txt.push_str(&csv);
    fs::write(dir.join("report.txt"), txt)?;
    print!("{csv}");
    Ok(())
}

fn grid(args: &GridArgs) -> Result<()> {
    let cfg = args.flags.config()?;
    let dir = out_dir(&cfg)?;
    let bounds = Bounds { x_min: args.x_min, x_max: args.x_max, y_min: args.y_min, y_max: args.y_max };
    let points = decision_grid(&cfg, cfg.seeds[0], bounds, args.resolution)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("grid.csv"), grid_csv(&points))?;
    println!("wrote {} grid points to {}", points.len(), dir.join("grid.csv").display());
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let base = args.flags.config()?;
    let dir = out_dir(&base)?;
    let methods: Vec<ExperimentMethod> = match &args.methods {
        Some(list) => list.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?,
        None => ExperimentMethod::ALL.to_vec(),
    };
    if methods.is_empty() {
        bail!("no methods to compare");
    }
    let mut reports = Vec::new();
    for method in methods {
        let cfg = ExperimentConfig { method, ..base.clone() };
        let report = run_experiment(&cfg)?;
        write_report(&dir.join(method.tag()), &report)?;
        reports.push(report);
    }
    let table = comparison_txt(&reports);
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), &table)?;
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = metrics_csv(r);
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        if i == 0 {
            csv.push_str(&format!("method,{header}\n"));
        }
        for line in lines {
            csv.push_str(&format!("{},{line}\n", r.config.method));
        }
    }
    fs::write(dir.join("metrics.csv"), csv)?;
    print!("{table}");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Grid(a) => grid(a),
        Command::Compare(a) => compare(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
