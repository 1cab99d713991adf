//! Loss, derivatives and trainers for the tensor-weight RBF network, plus the
//! full-weight least-squares baseline.
//!
//! The loss is `L(theta) = 1/(2M) sum_t (phi_t · w(theta) - r_t)^2` where
//! `phi_t` is either the raw Gaussian feature of sample `t` or its unit-norm
//! state, selected by [`LossConfig::normalize_features`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::linalg::{dot, mat_t_vec, mat_vec, norm};
use crate::tensorweight::TensorWeights;

/// Loss above which a trainer reports divergence.
pub const DIVERGENCE_LOSS: f64 = 1e6;
/// Default ridge for [`train_full_lstsq`].
pub const DEFAULT_RIDGE: f64 = 1e-10;
/// Damping ceiling for [`train_newton`]; reaching it aborts the run.
pub const MAX_DAMPING: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct LossConfig {
    /// Use unit-norm feature states instead of raw Gaussian features.
    pub normalize_features: bool,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Initial Levenberg damping for Newton steps.
    pub damping: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            normalize_features: true,
            learning_rate: 0.5,
            max_iters: 5000,
            grad_tol: 1e-6,
            damping: 1e-3,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("grad_tol must be > 0, got {}", self.grad_tol)));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::InvalidArgument(format!("damping must be >= 0, got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gd,
    Newton,
    Lstsq,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gd => "gd",
            Method::Newton => "newton",
            Method::Lstsq => "lstsq",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Method::Gd),
            "newton" => Ok(Method::Newton),
            "lstsq" => Ok(Method::Lstsq),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub theta: Vec<f64>,
    /// Loss at every visited iterate, starting with `theta0`.
    pub loss_trace: Vec<f64>,
    /// Accepted parameter updates.
    pub iterations: usize,
    pub wall_time: Duration,
    pub converged: bool,
    pub method: Method,
    pub final_grad_norm: f64,
    /// Newton trial steps rejected for increasing the loss.
    pub rejected_steps: usize,
    /// Newton damping in effect after each accepted step.
    pub damping_trace: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace holds the initial loss")
    }

    pub fn weights(&self) -> TensorWeights {
        TensorWeights::new(self.theta.clone()).expect("trained angles are finite")
    }
}

/// Cached features and labels for one training problem.
#[derive(Clone, Debug)]
pub struct TensorObjective {
    /// Row `t` is the feature of sample `t` against every center, before
    /// `row_scale` is applied.
    phi: Arc<DMatrix<f64>>,
    /// Per-row normalization, applied on the fly so the training Gram
    /// matrix can be shared with the model.
    row_scale: Option<Vec<f64>>,
    labels: Vec<f64>,
    m: usize,
}

impl TensorObjective {
    pub fn new(model: &KernelModel, ds: &Dataset, normalize: bool) -> Result<Self> {
        if ds.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: ds.dim() });
        }
        if !model.centered_on(ds) {
            return Self::from_features(model.feature_rows(ds, normalize)?, ds.labels());
        }
        let mut obj = Self::from_shared(model.shared_gram(), ds.labels())?;
        if normalize {
            obj.row_scale = Some(model.row_norms().iter().map(|r| r.sqrt().recip()).collect());
        }
        Ok(obj)
    }

    /// Build from an explicit feature matrix (rows are samples, columns the
    /// `2^m` weight coordinates).
    pub fn from_features(phi: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        Self::from_shared(Arc::new(phi), labels)
    }

    fn from_shared(phi: Arc<DMatrix<f64>>, labels: Vec<f64>) -> Result<Self> {
        let k = phi.ncols();
        if !k.is_power_of_two() || k < 2 {
            return Err(Error::InvalidArgument(format!(
                "tensor weights need a power-of-two feature count >= 2, got {k}"
            )));
        }
        if labels.len() != phi.nrows() || labels.is_empty() {
            return Err(Error::DimensionMismatch { expected: phi.nrows(), got: labels.len() });
        }
        Ok(Self { phi, row_scale: None, labels, m: k.trailing_zeros() as usize })
    }

    pub fn num_params(&self) -> usize {
        self.m
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn check(&self, w: &TensorWeights) -> Result<()> {
        if w.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: w.len() });
        }
        Ok(())
    }

    /// `phi_t · w(theta)` for every sample.
    pub fn predictions(&self, w: &TensorWeights) -> Result<Vec<f64>> {
        self.check(w)?;
        Ok(self.forward(&w.materialize()?))
    }

    /// `Phi v` with the row scale applied.
    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let mut out = mat_vec(&self.phi, v);
        if let Some(scale) = &self.row_scale {
            out.iter_mut().zip(scale).for_each(|(o, s)| *o *= s);
        }
        out
    }

    /// `Phi^T u` with the row scale applied.
    fn backward(&self, u: &[f64]) -> Vec<f64> {
        match &self.row_scale {
            Some(scale) => {
                let scaled: Vec<f64> = u.iter().zip(scale).map(|(a, s)| a * s).collect();
                mat_t_vec(&self.phi, &scaled)
            }
            None => mat_t_vec(&self.phi, u),
        }
    }

    fn residuals(&self, w: &TensorWeights) -> Result<Vec<f64>> {
        let mut a = self.predictions(w)?;
        a.iter_mut().zip(&self.labels).for_each(|(a, r)| *a -= r);
        Ok(a)
    }

    pub fn loss(&self, w: &TensorWeights) -> Result<f64> {
        let res = self.residuals(w)?;
        Ok(dot(&res, &res) / (2.0 * self.num_samples() as f64))
    }

    /// Loss and gradient. The gradient contracts each derivative tensor
    /// against `Phi^T (Phi w - r)` with [`TensorWeights::fast_inner`].
    pub fn loss_and_gradient(&self, w: &TensorWeights) -> Result<(f64, Vec<f64>)> {
        let res = self.residuals(w)?;
        let inv_m = 1.0 / self.num_samples() as f64;
        let loss = 0.5 * inv_m * dot(&res, &res);
        let back = self.backward(&res);
        let grad = (0..self.m)
            .map(|j| Ok(inv_m * w.shift_derivative(j)?.fast_inner(&back)?))
            .collect::<Result<Vec<_>>>()?;
        Ok((loss, grad))
    }

    pub fn gradient(&self, w: &TensorWeights) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(w)?.1)
    }

    /// Exact Hessian: the residual-weighted second-derivative term plus the
    /// Gauss-Newton term.
    pub fn hessian(&self, w: &TensorWeights) -> Result<DMatrix<f64>> {
        let res = self.residuals(w)?;
        let inv_m = 1.0 / self.num_samples() as f64;
        let back = self.backward(&res);
        let m = self.m;
        let mut jac = DMatrix::zeros(self.num_samples(), m);
        for j in 0..m {
            let dw = w.shift_derivative(j)?.materialize()?;
            jac.set_column(j, &DVector::from_vec(self.forward(&dw)));
        }
        let mut h = jac.tr_mul(&jac) * inv_m;
        for j in 0..m {
            for k in j..m {
                let second = w.second_shift_derivative(j, k)?.fast_inner(&back)? * inv_m;
                h[(j, k)] += second;
                if j != k {
                    h[(k, j)] += second;
                }
            }
        }
        Ok(h)
    }
}

fn objective(model: &KernelModel, ds: &Dataset, cfg: &LossConfig) -> Result<TensorObjective> {
    TensorObjective::new(model, ds, cfg.normalize_features)
}

pub fn loss(theta: &TensorWeights, model: &KernelModel, ds: &Dataset, cfg: &LossConfig) -> Result<f64> {
    objective(model, ds, cfg)?.loss(theta)
}

pub fn gradient(theta: &TensorWeights, model: &KernelModel, ds: &Dataset, cfg: &LossConfig) -> Result<Vec<f64>> {
    objective(model, ds, cfg)?.gradient(theta)
}

pub fn hessian(theta: &TensorWeights, model: &KernelModel, ds: &Dataset, cfg: &LossConfig) -> Result<DMatrix<f64>> {
    objective(model, ds, cfg)?.hessian(theta)
}

/// Full-batch gradient descent `theta <- theta - eta * grad L`.
pub fn train_gd(model: &KernelModel, ds: &Dataset, cfg: &LossConfig, theta0: &TensorWeights) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let obj = objective(model, ds, cfg)?;
    gd_on(&obj, cfg, theta0, start)
}

pub fn gd_on(obj: &TensorObjective, cfg: &LossConfig, theta0: &TensorWeights, start: Instant) -> Result<TrainReport> {
    cfg.validate()?;
    let mut theta = theta0.theta().to_vec();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let (converged, grad_norm) = loop {
        let w = TensorWeights::new(theta.clone())?;
        let (loss, grad) = obj.loss_and_gradient(&w)?;
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged { iter: iterations, loss });
        }
        trace.push(loss);
        let gn = norm(&grad);
        if gn <= cfg.grad_tol {
            break (true, gn);
        }
        if iterations == cfg.max_iters {
            break (false, gn);
        }
        theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= cfg.learning_rate * g);
        iterations += 1;
    };
    Ok(TrainReport {
        theta,
        loss_trace: trace,
        iterations,
        wall_time: start.elapsed(),
        converged,
        method: Method::Gd,
        final_grad_norm: grad_norm,
        rejected_steps: 0,
        damping_trace: Vec::new(),
    })
}

/// Levenberg damping schedule: halve on an accepted step, quadruple on a
/// rejected one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Damping {
    pub lambda: f64,
}

impl Damping {
    pub fn new(lambda0: f64) -> Self {
        Self { lambda: lambda0 }
    }

    pub fn accept(&mut self) {
        self.lambda *= 0.5;
    }

    pub fn reject(&mut self) {
        // a zero start would otherwise never grow
        self.lambda = (self.lambda * 4.0).max(1e-12);
    }

    pub fn exhausted(&self) -> bool {
        self.lambda > MAX_DAMPING
    }
}

/// Damped Newton: solve `(H + lambda I) delta = -grad` and accept the step
/// only if the loss does not increase.
pub fn train_newton(
    model: &KernelModel,
    ds: &Dataset,
    cfg: &LossConfig,
    theta0: &TensorWeights,
) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let obj = objective(model, ds, cfg)?;
    newton_on(&obj, cfg, theta0, start)
}

pub fn newton_on(
    obj: &TensorObjective,
    cfg: &LossConfig,
    theta0: &TensorWeights,
    start: Instant,
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut damping = Damping::new(cfg.damping);
    let mut w = theta0.clone();
    let (mut loss, mut grad) = obj.loss_and_gradient(&w)?;
    let mut trace = vec![loss];
    let mut damping_trace = Vec::new();
    let mut iterations = 0;
    let mut rejected = 0;
    let converged = loop {
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged { iter: iterations, loss });
        }
        if norm(&grad) <= cfg.grad_tol {
            break true;
        }
        if iterations == cfg.max_iters {
            break false;
        }
        let h = obj.hessian(&w)?;
        let g = DVector::from_column_slice(&grad);
        let accepted = loop {
            if damping.exhausted() {
                return Err(Error::Singular(format!(
                    "no descent step found at iteration {iterations} with damping up to {MAX_DAMPING:e}"
                )));
            }
            let mut a = h.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += damping.lambda;
            }
            let step = a.lu().solve(&(-&g)).filter(|s| s.iter().all(|v| v.is_finite()));
            let Some(step) = step else {
                damping.reject();
                continue;
            };
            let trial: Vec<f64> = w.theta().iter().zip(step.iter()).map(|(t, d)| t + d).collect();
            let trial = TensorWeights::new(trial)?;
            let (trial_loss, trial_grad) = obj.loss_and_gradient(&trial)?;
            if trial_loss <= loss {
                damping.accept();
                break (trial, trial_loss, trial_grad);
            }
            rejected += 1;
            damping.reject();
        };
        (w, loss, grad) = accepted;
        trace.push(loss);
        damping_trace.push(damping.lambda);
        iterations += 1;
    };
    Ok(TrainReport {
        theta: w.into_theta(),
        loss_trace: trace,
        iterations,
        wall_time: start.elapsed(),
        converged,
        method: Method::Newton,
        final_grad_norm: norm(&grad),
        rejected_steps: rejected,
        damping_trace,
    })
}

/// Solve `(K^2 + ridge I) w = K r` for symmetric `K` through its
/// eigendecomposition, i.e. `w = U diag(l / (l^2 + ridge)) U^T r`.
pub fn solve_ridge_normal(k: &DMatrix<f64>, r: &[f64], ridge: f64) -> Result<Vec<f64>> {
    if !k.is_square() || k.nrows() != r.len() {
        return Err(Error::DimensionMismatch { expected: k.nrows(), got: r.len() });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {ridge}")));
    }
    let eig = k.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let cutoff = lmax * lmax * f64::EPSILON * k.nrows() as f64;
    let proj = eig.eigenvectors.tr_mul(&DVector::from_column_slice(r));
    let mut scaled = proj.clone();
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        let denom = l * l + ridge;
        if denom <= cutoff && ridge == 0.0 {
            return Err(Error::Singular(format!(
                "eigenvalue {l:e} of the kernel matrix is numerically zero and no ridge was given"
            )));
        }
        scaled[i] *= l / denom;
    }
    let w = &eig.eigenvectors * scaled;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("least-squares solution is not finite".into()));
    }
    Ok(w.as_slice().to_vec())
}

/// Full-weight RBF baseline: one free weight per center, fit by
/// ridge-regularized least squares on the raw features.
pub fn train_full_lstsq(model: &KernelModel, ds: &Dataset, ridge: f64) -> Result<Vec<f64>> {
    if ds.len() != model.len() {
        return Err(Error::DimensionMismatch { expected: model.len(), got: ds.len() });
    }
    solve_ridge_normal(model.gram(), &ds.labels(), ridge)
}

/// Anything that maps an input point to a real decision score; the predicted
/// class is the sign with `sign(0) = +1`.
pub trait Scorer {
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(Label::from_score(self.score(x)?))
    }
}

/// Trained tensor-weight network.
#[derive(Clone, Debug)]
pub struct TensorClassifier<'a> {
    pub model: &'a KernelModel,
    pub weights: TensorWeights,
    pub normalize_features: bool,
}

impl Scorer for TensorClassifier<'_> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        self.weights.fast_inner(&self.model.features(x, self.normalize_features)?)
    }
}

/// Full-weight network with raw features.
#[derive(Clone, Debug)]
pub struct FullClassifier<'a> {
    pub model: &'a KernelModel,
    pub weights: Vec<f64>,
}

impl Scorer for FullClassifier<'_> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.model.feature_vector(x)?, &self.weights))
    }
}
