//! Benchmark harness: metrics, per-seed runs, sweeps over `m`, decision
//! grids and report files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::dataset::{generate, Dataset, Label, PatternFamily, PatternSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::svm::{solve_dual, solve_tensor_svm, DualConfig, FeatureKernel, SvmScorer, TensorSvmConfig};
use crate::tensorweight::TensorWeights;
use crate::train::{
    train_full_lstsq, train_gd, train_newton, FullClassifier, LossConfig, Scorer, TensorClassifier, DEFAULT_RIDGE,
};

/// Offset mixed into a training seed to get its fresh test-set seed.
const TEST_SEED_SALT: u64 = 0x5eed_0000_7e57_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentMethod {
    TensorGd,
    TensorNewton,
    FullLstsq,
    SvmDual,
    SvmTensor,
}

impl ExperimentMethod {
    pub const ALL: [ExperimentMethod; 5] = [
        ExperimentMethod::TensorGd,
        ExperimentMethod::TensorNewton,
        ExperimentMethod::FullLstsq,
        ExperimentMethod::SvmDual,
        ExperimentMethod::SvmTensor,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentMethod::TensorGd => "tensor-gd",
            ExperimentMethod::TensorNewton => "tensor-newton",
            ExperimentMethod::FullLstsq => "full-lstsq",
            ExperimentMethod::SvmDual => "svm-dual",
            ExperimentMethod::SvmTensor => "svm-tensor",
        }
    }

    fn has_theta(self) -> bool {
        matches!(self, ExperimentMethod::TensorGd | ExperimentMethod::TensorNewton | ExperimentMethod::SvmTensor)
    }
}

impl fmt::Display for ExperimentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ExperimentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// Ratio of correct predictions on the training set.
    pub rcp: f64,
    /// Training loss `(1/2M) sum (y_t - r_t)^2` of the fitted scores.
    pub mse: f64,
    /// Ratio of correct predictions on a fresh test set.
    pub inf: f64,
    pub seconds: f64,
}

impl Metrics {
    /// Component-wise mean; `None` for an empty slice.
    pub fn mean(all: &[Metrics]) -> Option<Metrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Some(Metrics { rcp: sum(|m| m.rcp), mse: sum(|m| m.mse), inf: sum(|m| m.inf), seconds: sum(|m| m.seconds) })
    }
}

/// `1 - (1/4M) sum_t (sign(y_t) - r_t)^2` with `sign(0) = +1`.
pub fn rcp(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    if scores.is_empty() {
        return Err(Error::InvalidArgument("RCP of an empty set".into()));
    }
    let miss: f64 = scores
        .iter()
        .zip(labels)
        .map(|(y, r)| (Label::from_score(*y).value() - r).powi(2))
        .sum();
    Ok(1.0 - miss / (4.0 * scores.len() as f64))
}

/// `(1/2M) sum_t (y_t - r_t)^2`.
pub fn mse(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    Ok(scores.iter().zip(labels).map(|(y, r)| (y - r).powi(2)).sum::<f64>() / (2.0 * scores.len() as f64))
}

pub fn scores(scorer: &dyn Scorer, ds: &Dataset) -> Result<Vec<f64>> {
    ds.samples().iter().map(|s| scorer.score(&s.x)).collect()
}

pub fn rcp_of(scorer: &dyn Scorer, ds: &Dataset) -> Result<f64> {
    rcp(&scores(scorer, ds)?, &ds.labels())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub pattern: PatternSpec,
    pub method: ExperimentMethod,
    pub loss: LossConfig,
    pub seeds: Vec<u64>,
    pub ridge: f64,
    pub dual: DualConfig,
    pub tensor_svm: TensorSvmConfig,
    /// SVM methods use the Gaussian kernel directly instead of explicit
    /// feature vectors.
    pub kernel_trick: bool,
    /// Write wall-clock seconds into report files. Off by default so that
    /// identical configurations give identical files.
    pub timings: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pattern: PatternSpec::new(PatternFamily::Blobs, 256, 0.05, 0),
            method: ExperimentMethod::TensorGd,
            loss: LossConfig { learning_rate: 5.0, max_iters: 300, ..LossConfig::default() },
            seeds: (0..10).collect(),
            ridge: DEFAULT_RIDGE,
            dual: DualConfig::default(),
            tensor_svm: TensorSvmConfig::default(),
            kernel_trick: false,
            timings: false,
            output: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad value `{value}` for `{key}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad value `{value}` for `{key}`: expected a boolean"))),
    }
}

/// Seeds from `a..b` (half-open) or a comma-separated list.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (parse_value("seeds", a.trim())?, parse_value("seeds", b.trim())?);
        (a..b).collect()
    } else {
        value.split(',').map(|s| parse_value("seeds", s.trim())).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::InvalidArgument(format!("seed list `{value}` is empty")));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        if self.pattern.samples < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", self.pattern.samples)));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        self.loss.validate()
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "pattern" => self.pattern.family = parse_value(key, value)?,
            "samples" => self.pattern.samples = parse_value(key, value)?,
            "noise" => self.pattern.noise = parse_value(key, value)?,
            "seed" => self.seeds = vec![parse_value(key, value)?],
            "seeds" => self.seeds = parse_seeds(value)?,
            "method" => self.method = value.parse()?,
            "learning_rate" => self.loss.learning_rate = parse_value(key, value)?,
            "max_iters" => self.loss.max_iters = parse_value(key, value)?,
            "grad_tol" => self.loss.grad_tol = parse_value(key, value)?,
            "damping" => self.loss.damping = parse_value(key, value)?,
            "normalize" => self.loss.normalize_features = parse_bool(key, value)?,
            "ridge" => self.ridge = parse_value(key, value)?,
            "svm_iters" => self.dual.iters = parse_value(key, value)?,
            "svm_rounds" => self.tensor_svm.rounds = parse_value(key, value)?,
            "svm_round_iters" => self.tensor_svm.iters_per_round = parse_value(key, value)?,
            "kernel_trick" => self.kernel_trick = parse_bool(key, value)?,
            "timings" => self.timings = parse_bool(key, value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::InvalidArgument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        for (key, value, line) in parse_key_values(path, &text)? {
            self.set(&key, &value).map_err(|e| Error::Parse { path: path.to_path_buf(), line, msg: e.to_string() })?;
        }
        Ok(())
    }
}

/// `key = value` (or `key: value`) lines; `#` starts a comment.
pub fn parse_key_values(path: &Path, text: &str) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Parse { path: path.to_path_buf(), line: i + 1, msg: format!("expected key = value, got `{line}`") })?;
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// Seed of the fresh test set paired with a training seed.
pub fn test_seed(seed: u64) -> u64 {
    seed ^ TEST_SEED_SALT
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub metrics: Metrics,
    /// Trained angles for the tensor-weight methods.
    pub theta: Option<Vec<f64>>,
    pub loss_trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub result: std::result::Result<SeedRun, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedOutcome>,
}

impl ExperimentReport {
    pub fn successes(&self) -> impl Iterator<Item = (u64, &SeedRun)> {
        self.runs.iter().filter_map(|o| o.result.as_ref().ok().map(|r| (o.seed, r)))
    }

    pub fn failures(&self) -> impl Iterator<Item = (u64, &str)> {
        self.runs.iter().filter_map(|o| o.result.as_ref().err().map(|e| (o.seed, e.as_str())))
    }

    /// Mean metrics over successful seeds.
    pub fn mean(&self) -> Option<Metrics> {
        Metrics::mean(&self.successes().map(|(_, r)| r.metrics).collect::<Vec<_>>())
    }
}

/// What a training run leaves behind besides its scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    /// Scores of the training samples, in order.
    pub train_scores: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Train `cfg.method` on `train` and hand the fitted scorer to `f`.
pub fn with_trained<R>(
    cfg: &ExperimentConfig,
    train: &Dataset,
    seed: u64,
    f: impl FnOnce(&dyn Scorer, Fit) -> Result<R>,
) -> Result<R> {
    let model = KernelModel::fit(train)?;
    let labels = train.labels();
    match cfg.method {
        ExperimentMethod::TensorGd | ExperimentMethod::TensorNewton => {
            let theta0 = TensorWeights::random(train.log2_len()?, seed)?;
            let report = if cfg.method == ExperimentMethod::TensorGd {
                train_gd(&model, train, &cfg.loss, &theta0)?
            } else {
                train_newton(&model, train, &cfg.loss, &theta0)?
            };
            let clf = TensorClassifier {
                model: &model,
                weights: report.weights(),
                normalize_features: cfg.loss.normalize_features,
            };
            let train_scores = scores(&clf, train)?;
            let fit = Fit { train_scores, theta: Some(report.theta), trace: report.loss_trace, iterations: report.iterations };
            f(&clf, fit)
        }
        ExperimentMethod::FullLstsq => {
            let weights = train_full_lstsq(&model, train, cfg.ridge)?;
            let train_scores = crate::linalg::mat_vec(model.gram(), &weights);
            let clf = FullClassifier { model: &model, weights };
            f(&clf, Fit { train_scores, theta: None, trace: Vec::new(), iterations: 0 })
        }
        ExperimentMethod::SvmDual | ExperimentMethod::SvmTensor => {
            let kernel = if cfg.kernel_trick { FeatureKernel::KernelTrick(&model) } else { FeatureKernel::Explicit(&model) };
            let (decision, theta, trace) = if cfg.method == ExperimentMethod::SvmDual {
                let sol = solve_dual(&kernel, &labels, &cfg.dual)?;
                (sol.decision(), None, sol.objective_trace)
            } else {
                let svm_cfg = TensorSvmConfig { seed, ..cfg.tensor_svm.clone() };
                let sol = solve_tensor_svm(&kernel, &labels, &svm_cfg)?;
                (sol.decision(), Some(sol.theta.clone()), sol.objective_trace)
            };
            let k = kernel.matrix();
            let train_scores = (0..train.len())
                .map(|t| decision.value_from_cross(k.column(t).as_slice()))
                .collect();
            let iterations = trace.len();
            let clf = SvmScorer { kernel: &kernel, decision };
            f(&clf, Fit { train_scores, theta, trace, iterations })
        }
    }
}

/// Train `cfg.method` on `train` and score it on `train` and `test`.
pub fn run_on_data(cfg: &ExperimentConfig, train: &Dataset, test: &Dataset, seed: u64) -> Result<SeedRun> {
    let start = Instant::now();
    let labels = train.labels();
    with_trained(cfg, train, seed, |scorer, fit| {
        let seconds = start.elapsed().as_secs_f64();
        let metrics = Metrics {
            rcp: rcp(&fit.train_scores, &labels)?,
            mse: mse(&fit.train_scores, &labels)?,
            inf: rcp_of(scorer, test)?,
            seconds,
        };
        Ok(SeedRun { metrics, theta: fit.theta, loss_trace: fit.trace, iterations: fit.iterations })
    })
}

/// Generate the seed's training set and its fresh test set, then run.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let train = generate(&cfg.pattern.with_seed(seed))?;
    let test = generate(&cfg.pattern.with_seed(test_seed(seed)))?;
    run_on_data(cfg, &train, &test, seed)
}

/// Train on the seed's generated set and score a grid.
pub fn decision_grid(cfg: &ExperimentConfig, seed: u64, bounds: Bounds, resolution: usize) -> Result<Vec<[f64; 3]>> {
    let train = generate(&cfg.pattern.with_seed(seed))?;
    with_trained(cfg, &train, seed, |scorer, _| export_decision_grid(scorer, bounds, resolution))
}

/// Every seed in order; a failing seed is recorded and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let runs = cfg
        .seeds
        .iter()
        .map(|&seed| SeedOutcome { seed, result: run_seed(cfg, seed).map_err(|e| e.to_string()) })
        .collect();
    Ok(ExperimentReport { config: cfg.clone(), runs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub samples: usize,
    /// `None` when every seed failed.
    pub mean: Option<Metrics>,
    pub failures: usize,
}

/// One averaged row per `m`, with `2^m` samples.
pub fn sweep_m(cfg: &ExperimentConfig, m_range: std::ops::RangeInclusive<usize>) -> Result<Vec<SweepRow>> {
    if m_range.is_empty() {
        return Err(Error::InvalidArgument("empty m range".into()));
    }
    if *m_range.start() < 1 || *m_range.end() > crate::tensorweight::MAX_MATERIALIZE_QUBITS {
        return Err(Error::TooLarge(format!(
            "m range {}..={} outside 1..={}",
            m_range.start(),
            m_range.end(),
            crate::tensorweight::MAX_MATERIALIZE_QUBITS
        )));
    }
    m_range
        .map(|m| {
            let mut c = cfg.clone();
            c.pattern.samples = 1 << m;
            let report = run_experiment(&c)?;
            Ok(SweepRow { m, samples: 1 << m, mean: report.mean(), failures: report.failures().count() })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow], timings: bool) -> String {
    let mut out = String::from(if timings { "m,samples,rcp,mse,inf,failures,seconds\n" } else { "m,samples,rcp,mse,inf,failures\n" });
    for row in rows {
        let _ = write!(out, "{},{}", row.m, row.samples);
        match row.mean {
            Some(mt) => {
                let _ = write!(out, ",{:.6},{:.6},{:.6},{}", mt.rcp, mt.mse, mt.inf, row.failures);
                if timings {
                    let _ = write!(out, ",{:.3}", mt.seconds);
                }
            }
            None => {
                let _ = write!(out, ",,,,{}", row.failures);
                if timings {
                    out.push(',');
                }
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 }
    }
}

/// Score a `resolution x resolution` grid; rows run over `x1` fastest.
pub fn export_decision_grid(scorer: &dyn Scorer, bounds: Bounds, resolution: usize) -> Result<Vec<[f64; 3]>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution must be >= 2, got {resolution}")));
    }
    let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
    if !ok(bounds.x_min, bounds.x_max) || !ok(bounds.y_min, bounds.y_max) {
        return Err(Error::Degenerate(format!("grid bounds {bounds:?} are empty or not finite")));
    }
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut grid = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let y = step(bounds.y_min, bounds.y_max, j);
        for i in 0..resolution {
            let x = step(bounds.x_min, bounds.x_max, i);
            grid.push([x, y, scorer.score(&[x, y])?]);
        }
    }
    Ok(grid)
}

pub fn grid_csv(grid: &[[f64; 3]]) -> String {
    let mut out = String::from("x1,x2,decision\n");
    for [x, y, v] in grid {
        let _ = writeln!(out, "{x:.6},{y:.6},{v:.9e}");
    }
    out
}

/// Angles as a comma-separated list that parses back to the same values.
pub fn format_theta(theta: &[f64]) -> String {
    theta.iter().map(|t| format!("{t:.17e}")).collect::<Vec<_>>().join(",")
}

/// Parse the lines written by [`theta_txt`]: `seed: t0,t1,...`.
pub fn parse_theta_file(path: &Path, text: &str) -> Result<Vec<(u64, Vec<f64>)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let err = |msg: String| Error::Parse { path: path.to_path_buf(), line: i + 1, msg };
            let (seed, rest) = l.split_once(':').ok_or_else(|| err("expected `seed: angles`".into()))?;
            let seed = seed.trim().parse().map_err(|e| err(format!("bad seed: {e}")))?;
            let theta = rest
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| err(format!("bad angle `{}`: {e}", v.trim()))))
                .collect::<Result<Vec<_>>>()?;
            Ok((seed, theta))
        })
        .collect()
}

pub fn theta_txt(report: &ExperimentReport) -> String {
    let mut out = String::new();
    for (seed, run) in report.successes() {
        if let Some(theta) = &run.theta {
            let _ = writeln!(out, "{seed}: {}", format_theta(theta));
        }
    }
    out
}

pub fn metrics_csv(report: &ExperimentReport) -> String {
    let timings = report.config.timings;
    let mut out = String::from(if timings { "seed,rcp,mse,inf,seconds,status\n" } else { "seed,rcp,mse,inf,status\n" });
    for o in &report.runs {
        match &o.result {
            Ok(r) => {
                let m = r.metrics;
                let _ = write!(out, "{},{:.6},{:.6},{:.6}", o.seed, m.rcp, m.mse, m.inf);
                if timings {
                    let _ = write!(out, ",{:.3}", m.seconds);
                }
                out.push_str(",ok\n");
            }
            Err(_) => {
                let _ = writeln!(out, "{},,,{},error", o.seed, if timings { "," } else { "" });
            }
        }
    }
    out
}

pub fn loss_trace_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("seed,iteration,objective\n");
    for (seed, run) in report.successes() {
        for (i, v) in run.loss_trace.iter().enumerate() {
            let _ = writeln!(out, "{seed},{i},{v:.12e}");
        }
    }
    out
}

fn config_lines(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pattern = {}", cfg.pattern.family.name());
    let _ = writeln!(out, "samples = {}", cfg.pattern.samples);
    let _ = writeln!(out, "noise = {}", cfg.pattern.noise);
    let _ = writeln!(out, "method = {}", cfg.method);
    let _ = writeln!(out, "normalize = {}", cfg.loss.normalize_features);
    let _ = writeln!(out, "learning_rate = {}", cfg.loss.learning_rate);
    let _ = writeln!(out, "max_iters = {}", cfg.loss.max_iters);
    let _ = writeln!(out, "grad_tol = {:e}", cfg.loss.grad_tol);
    let _ = writeln!(out, "damping = {:e}", cfg.loss.damping);
    let _ = writeln!(out, "ridge = {:e}", cfg.ridge);
    let _ = writeln!(out, "kernel_trick = {}", cfg.kernel_trick);
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds = {}", seeds.join(","));
    out
}

pub fn report_txt(report: &ExperimentReport) -> String {
    let mut out = String::from("# configuration\n");
    out.push_str(&config_lines(&report.config));
    out.push_str("\n# per seed\n");
    let _ = writeln!(out, "{:>8} {:>8} {:>10} {:>8} {:>6}", "seed", "RCP", "MSE", "INF", "iters");
    for o in &report.runs {
        match &o.result {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{:>8} {:>8.4} {:>10.4e} {:>8.4} {:>6}",
                    o.seed, r.metrics.rcp, r.metrics.mse, r.metrics.inf, r.iterations
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:>8} error: {e}", o.seed);
            }
        }
    }
    out.push_str("\n# mean\n");
    match report.mean() {
        Some(m) => {
            let _ = writeln!(out, "RCP = {:.4}\nMSE = {:.4e}\nINF = {:.4}", m.rcp, m.mse, m.inf);
            if report.config.timings {
                let _ = writeln!(out, "seconds = {:.3}", m.seconds);
            }
        }
        None => out.push_str("no successful seeds\n"),
    }
    out
}

/// Table of mean metrics, one row per method.
pub fn comparison_txt(reports: &[ExperimentReport]) -> String {
    let timings = reports.iter().any(|r| r.config.timings);
    let mut out = String::new();
    if let Some(first) = reports.first() {
        let _ = writeln!(
            out,
            "pattern = {}, samples = {}, noise = {}, seeds = {}\n",
            first.config.pattern.family.name(),
            first.config.pattern.samples,
            first.config.pattern.noise,
            first.config.seeds.len()
        );
    }
    let _ = write!(out, "{:<14} {:>8} {:>10} {:>8} {:>6}", "method", "RCP", "MSE", "INF", "failed");
    out.push_str(if timings { "  seconds\n" } else { "\n" });
    for r in reports {
        let failed = r.failures().count();
        match r.mean() {
            Some(m) => {
                let _ = write!(out, "{:<14} {:>8.4} {:>10.3e} {:>8.4} {:>6}", r.config.method.tag(), m.rcp, m.mse, m.inf, failed);
                if timings {
                    let _ = write!(out, "  {:.3}", m.seconds);
                }
                out.push('\n');
            }
            None => {
                let _ = writeln!(out, "{:<14} {:>8} {:>10} {:>8} {:>6}", r.config.method.tag(), "-", "-", "-", failed);
            }
        }
    }
    out
}

/// Write `report.txt`, `metrics.csv`, `loss_trace.csv` and `theta.txt`.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), report_txt(report))?;
    fs::write(dir.join("metrics.csv"), metrics_csv(report))?;
    fs::write(dir.join("loss_trace.csv"), loss_trace_csv(report))?;
    if report.config.method.has_theta() {
        fs::write(dir.join("theta.txt"), theta_txt(report))?;
    }
    Ok(())
}
