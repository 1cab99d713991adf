//! Hard-margin kernel SVM through its dual, and a variant whose multipliers
//! are restricted to a tensor-product vector `w(theta)`.
//!
//! The dual maximizes `Q(w) = sum_t w_t - 1/2 sum_{s,t} w_s w_t r_s r_t K_st`
//! subject to `sum_t w_t r_t = 0` and `w >= 0`; the separating function is
//! `sum_t w_t r_t K(x_t, x) - b`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::linalg::{dot, mat_vec, spectral_radius_psd};
use crate::tensorweight::TensorWeights;
use crate::train::Scorer;

/// How feature inner products `f(x_s) · f(x_t)` are formed.
#[derive(Clone, Debug)]
pub enum FeatureKernel<'a> {
    /// Explicit Gaussian feature vectors: `K = G G` with `G` the Gram matrix.
    Explicit(&'a KernelModel),
    /// The Gaussian kernel itself: `K = G`.
    KernelTrick(&'a KernelModel),
    /// Plain dot products of the raw points.
    Linear(Vec<Vec<f64>>),
}

impl FeatureKernel<'_> {
    pub fn len(&self) -> usize {
        match self {
            FeatureKernel::Explicit(m) | FeatureKernel::KernelTrick(m) => m.len(),
            FeatureKernel::Linear(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `K_st` over the training points.
    pub fn matrix(&self) -> DMatrix<f64> {
        match self {
            FeatureKernel::Explicit(m) => m.gram() * m.gram(),
            FeatureKernel::KernelTrick(m) => m.gram().clone(),
            FeatureKernel::Linear(p) => {
                DMatrix::from_fn(p.len(), p.len(), |s, t| dot(&p[s], &p[t]))
            }
        }
    }

    /// `K(x_t, x)` for every training point `t`.
    pub fn cross(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureKernel::Explicit(m) => Ok(mat_vec(m.gram(), &m.feature_vector(x)?)),
            FeatureKernel::KernelTrick(m) => m.feature_vector(x),
            FeatureKernel::Linear(p) => {
                if let Some(q) = p.first().filter(|q| q.len() != x.len()) {
                    return Err(Error::DimensionMismatch { expected: q.len(), got: x.len() });
                }
                Ok(p.iter().map(|q| dot(q, x)).collect())
            }
        }
    }
}

fn check_labels(k: &DMatrix<f64>, labels: &[f64]) -> Result<()> {
    if k.nrows() != labels.len() || !k.is_square() {
        return Err(Error::DimensionMismatch { expected: k.nrows(), got: labels.len() });
    }
    Ok(())
}

/// `Q(w)` for a precomputed feature kernel matrix.
pub fn dual_objective(w: &[f64], k: &DMatrix<f64>, labels: &[f64]) -> Result<f64> {
    check_labels(k, labels)?;
    if w.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: w.len() });
    }
    let wr: Vec<f64> = w.iter().zip(labels).map(|(a, r)| a * r).collect();
    let kwr = mat_vec(k, &wr);
    Ok(w.iter().sum::<f64>() - 0.5 * dot(&wr, &kwr))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualConfig {
    pub iters: usize,
    /// Ascent step; `None` uses `1 / lambda_max(K)`.
    pub step: Option<f64>,
    pub sv_tol: f64,
    pub feas_tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self { iters: 20_000, step: None, sv_tol: 1e-6, feas_tol: 1e-8 }
    }
}

/// Linear-in-the-multipliers decision function `sum_i c_i K(x_i, x) - b`
/// over a subset of training indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub indices: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub b: f64,
}

impl Decision {
    pub fn value_from_cross(&self, cross: &[f64]) -> f64 {
        self.indices.iter().zip(&self.coeffs).map(|(&i, c)| c * cross[i]).sum::<f64>() - self.b
    }
}

#[derive(Clone, Debug)]
pub struct DualSolution {
    /// Dual multipliers, one per training point.
    pub w: Vec<f64>,
    pub b: f64,
    pub support_indices: Vec<usize>,
    pub labels: Vec<f64>,
    /// `Q` after every projected step.
    pub objective_trace: Vec<f64>,
}

impl DualSolution {
    /// Decision function summed over support vectors only.
    pub fn decision(&self) -> Decision {
        Decision {
            indices: self.support_indices.clone(),
            coeffs: self.support_indices.iter().map(|&i| self.w[i] * self.labels[i]).collect(),
            b: self.b,
        }
    }

    /// Decision function over every training point.
    pub fn full_decision(&self) -> Decision {
        Decision {
            indices: (0..self.w.len()).collect(),
            coeffs: self.w.iter().zip(&self.labels).map(|(a, r)| a * r).collect(),
            b: self.b,
        }
    }

    pub fn constraint_residual(&self) -> f64 {
        dot(&self.w, &self.labels)
    }
}

/// Euclidean projection onto `{w >= 0, sum_t w_t r_t = 0}` for `r_t = ±1`:
/// `w_t = max(0, y_t - lambda r_t)` with `lambda` found by bisection on the
/// monotone constraint residual.
pub fn project_feasible(y: &[f64], labels: &[f64]) -> Vec<f64> {
    let residual = |lambda: f64| -> f64 {
        y.iter().zip(labels).map(|(v, r)| r * (v - lambda * r).max(0.0)).sum()
    };
    let span = y.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut w: Vec<f64> = y.iter().zip(labels).map(|(v, r)| (v - lambda * r).max(0.0)).collect();
    // Split the leftover roundoff over the larger class side so the equality
    // holds to machine precision without leaving the orthant.
    let res = dot(&w, labels);
    if res != 0.0 {
        let side = if res > 0.0 { 1.0 } else { -1.0 };
        let mass: f64 = w.iter().zip(labels).filter(|(_, r)| **r == side).map(|(v, _)| v).sum();
        if mass > 0.0 {
            let f = 1.0 - res.abs() / mass;
            w.iter_mut().zip(labels).filter(|(_, r)| **r == side).for_each(|(v, _)| *v *= f);
        }
    }
    w
}

fn both_classes(labels: &[f64]) -> Result<()> {
    if !(labels.iter().any(|&r| r > 0.0) && labels.iter().any(|&r| r < 0.0)) {
        return Err(Error::InvalidArgument("SVM training needs both classes present".into()));
    }
    if labels.iter().any(|&r| Label::from_value(r).is_none()) {
        return Err(Error::InvalidArgument("SVM labels must be +1 or -1".into()));
    }
    Ok(())
}

/// Projected gradient ascent on the dual.
pub fn solve_dual(kernel: &FeatureKernel, labels: &[f64], cfg: &DualConfig) -> Result<DualSolution> {
    let k = kernel.matrix();
    solve_dual_matrix(&k, labels, cfg)
}

pub fn solve_dual_matrix(k: &DMatrix<f64>, labels: &[f64], cfg: &DualConfig) -> Result<DualSolution> {
    check_labels(k, labels)?;
    both_classes(labels)?;
    let m = labels.len();
    let r = DVector::from_column_slice(labels);
    let q = DMatrix::from_fn(m, m, |s, t| labels[s] * labels[t] * k[(s, t)]);
    let step = match cfg.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::InvalidArgument(format!("step must be > 0, got {s}"))),
        None => {
            let l = spectral_radius_psd(&q, 500);
            if l <= 0.0 {
                return Err(Error::Degenerate("kernel matrix is zero".into()));
            }
            1.0 / l
        }
    };
    let objective = |w: &DVector<f64>| w.sum() - 0.5 * w.dot(&(&q * w));
    let mut w = DVector::zeros(m);
    let mut trace = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let grad = DVector::from_element(m, 1.0) - &q * &w;
        let y = &w + grad * step;
        let next = DVector::from_vec(project_feasible(y.as_slice(), labels));
        let moved = (&next - &w).amax();
        w = next;
        trace.push(objective(&w));
        if moved <= 1e-15 {
            break;
        }
    }
    let support: Vec<usize> = (0..m).filter(|&t| w[t] > cfg.sv_tol).collect();
    let wr = w.component_mul(&r);
    let margins = k * &wr;
    let b = if support.is_empty() {
        0.0
    } else {
        support.iter().map(|&t| margins[t] - labels[t]).sum::<f64>() / support.len() as f64
    };
    let sol = DualSolution {
        w: w.as_slice().to_vec(),
        b,
        support_indices: support,
        labels: labels.to_vec(),
        objective_trace: trace,
    };
    if sol.constraint_residual().abs() > cfg.feas_tol {
        return Err(Error::Singular(format!(
            "dual constraint residual {:e} exceeds {:e}",
            sol.constraint_residual(),
            cfg.feas_tol
        )));
    }
    Ok(sol)
}

/// `sum_{t in support} w_t r_t K(x_t, x) - b`.
pub fn decision_value(x: &[f64], sol: &DualSolution, kernel: &FeatureKernel) -> Result<f64> {
    Ok(sol.decision().value_from_cross(&kernel.cross(x)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorSvmConfig {
    /// Initial weight of the `(sum_t w_t r_t)^2` penalty.
    pub mu: f64,
    /// Initial weight of the `sum_t max(0, -w_t)^2` penalty.
    pub nu: f64,
    /// Factor applied to both penalties after each round.
    pub escalation: f64,
    pub rounds: usize,
    pub iters_per_round: usize,
    /// Initial ascent step; adapted by backtracking.
    pub step: f64,
    pub seed: u64,
}

impl Default for TensorSvmConfig {
    fn default() -> Self {
        Self { mu: 10.0, nu: 10.0, escalation: 2.0, rounds: 4, iters_per_round: 200, step: 0.1, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct TensorSvmSolution {
    pub theta: Vec<f64>,
    /// Penalty weights in effect during the final round.
    pub mu: f64,
    pub nu: f64,
    pub b: f64,
    pub labels: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

impl TensorSvmSolution {
    pub fn weights(&self) -> TensorWeights {
        TensorWeights::new(self.theta.clone()).expect("finite angles")
    }

    pub fn multipliers(&self) -> Vec<f64> {
        self.weights().materialize().expect("solution size already materialized")
    }

    pub fn decision(&self) -> Decision {
        let w = self.multipliers();
        Decision {
            indices: (0..w.len()).collect(),
            coeffs: w.iter().zip(&self.labels).map(|(a, r)| a * r).collect(),
            b: self.b,
        }
    }
}

/// Penalized dual `Q(w) - mu (w·r)^2 - nu sum max(0, -w_t)^2` and its
/// gradient in `w`.
pub fn penalized_objective(w: &[f64], k: &DMatrix<f64>, labels: &[f64], mu: f64, nu: f64) -> Result<(f64, Vec<f64>)> {
    check_labels(k, labels)?;
    let wr: Vec<f64> = w.iter().zip(labels).map(|(a, r)| a * r).collect();
    let kwr = mat_vec(k, &wr);
    let eq = dot(w, labels);
    let neg: f64 = w.iter().map(|v| (-v).max(0.0).powi(2)).sum();
    let value = w.iter().sum::<f64>() - 0.5 * dot(&wr, &kwr) - mu * eq * eq - nu * neg;
    let grad = w
        .iter()
        .zip(labels)
        .zip(&kwr)
        .map(|((v, r), kv)| 1.0 - r * kv - 2.0 * mu * eq * r + 2.0 * nu * (-v).max(0.0))
        .collect();
    Ok((value, grad))
}

/// Pick `b` minimizing training misclassifications of `sign(s_t - b)`;
/// among optimal thresholds the midpoint of the widest gap wins.
pub fn fit_bias(scores: &[f64], labels: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pos_total = labels.iter().filter(|&&r| r > 0.0).count();
    // threshold k: b sits below order[k]; predictions are +1 for order[k..]
    let mut best = (usize::MAX, f64::NEG_INFINITY, 0.0);
    let mut pos_below = 0;
    let mut neg_below = 0;
    for k in 0..=order.len() {
        let neg_above = labels.len() - k - (pos_total - pos_below);
        let errors = pos_below + neg_above;
        let (b, width) = match k {
            0 => (scores[order[0]] - 1.0, 0.0),
            k if k == order.len() => (scores[order[k - 1]] + 1.0, 0.0),
            k => {
                let (lo, hi) = (scores[order[k - 1]], scores[order[k]]);
                (0.5 * (lo + hi), hi - lo)
            }
        };
        if errors < best.0 || (errors == best.0 && width > best.1) {
            best = (errors, width, b);
        }
        if k < order.len() {
            if labels[order[k]] > 0.0 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
        }
    }
    let _ = neg_below;
    best.2
}

/// Gradient ascent over `theta` on the penalized dual with escalating
/// penalties. The multipliers `w(theta)` keep unit norm, so they do not
/// reproduce the magnitudes of the unrestricted dual.
pub fn solve_tensor_svm(kernel: &FeatureKernel, labels: &[f64], cfg: &TensorSvmConfig) -> Result<TensorSvmSolution> {
    let k = kernel.matrix();
    check_labels(&k, labels)?;
    both_classes(labels)?;
    let m_count = labels.len();
    if !m_count.is_power_of_two() || m_count < 2 {
        return Err(Error::InvalidArgument(format!("tensor SVM needs a power-of-two sample count, got {m_count}")));
    }
    let m = m_count.trailing_zeros() as usize;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta: Vec<f64> = (0..m)
        .map(|_| rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU)
        .collect();
    let (mut mu, mut nu) = (cfg.mu, cfg.nu);
    let mut step = cfg.step;
    let mut trace = Vec::new();

    let eval = |theta: &[f64], mu: f64, nu: f64| -> Result<(f64, Vec<f64>)> {
        let tw = TensorWeights::new(theta.to_vec())?;
        let (value, gw) = penalized_objective(&tw.materialize()?, &k, labels, mu, nu)?;
        let grad = (0..m)
            .map(|j| tw.shift_derivative(j)?.fast_inner(&gw))
            .collect::<Result<Vec<_>>>()?;
        Ok((value, grad))
    };

    for round in 0..cfg.rounds {
        if round > 0 {
            mu *= cfg.escalation;
            nu *= cfg.escalation;
        }
        let (mut value, mut grad) = eval(&theta, mu, nu)?;
        for iter in 0..cfg.iters_per_round {
            if !value.is_finite() {
                return Err(Error::Diverged { iter, loss: value });
            }
            let mut accepted = false;
            while step > 1e-14 {
                let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
                let (tv, tg) = eval(&trial, mu, nu)?;
                if tv >= value {
                    theta = trial;
                    value = tv;
                    grad = tg;
                    step *= 1.2;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            trace.push(value);
            if !accepted {
                break;
            }
        }
        step = step.max(cfg.step * 1e-3);
    }

    let w = TensorWeights::new(theta.clone())?.materialize()?;
    let wr: Vec<f64> = w.iter().zip(labels).map(|(a, r)| a * r).collect();
    let scores = mat_vec(&k, &wr);
    let b = fit_bias(&scores, labels);
    Ok(TensorSvmSolution { theta, mu, nu, b, labels: labels.to_vec(), objective_trace: trace })
}

/// A decision function paired with the kernel that evaluates it.
#[derive(Clone, Debug)]
pub struct SvmScorer<'a> {
    pub kernel: &'a FeatureKernel<'a>,
    pub decision: Decision,
}

impl Scorer for SvmScorer<'_> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(self.decision.value_from_cross(&self.kernel.cross(x)?))
    }
}
