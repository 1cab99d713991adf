//! Truncated coherent states and the kernel density operator obtained by
//! tracing the Fock register out of a superposition of them.
//!
//! A real coordinate `r` maps to the Fock-basis state with amplitudes
//! proportional to `(r/sigma)^k / sqrt(k!)`. Overlaps of two such states
//! equal `exp(-(r - s)^2 / 2 sigma^2)`, so a tensor product over coordinates
//! reproduces the Gaussian kernel.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::DensityOperator;

/// Default ceiling on the Fock cutoff `N`.
pub const DEFAULT_MAX_CUTOFF: usize = 200;
/// Largest `M * N^n` amplitude count [`build_rho_from_coherent`] will allocate.
pub const MAX_FOCK_AMPLITUDES: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedCoherentState {
    r: f64,
    sigma: f64,
    amplitudes: Vec<f64>,
}

/// `ln((a^2)^N / N!) + a^2`, the log of the tail bound at cutoff `N`.
fn log_tail_bound(a: f64, n: usize) -> f64 {
    let ln_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    if a == 0.0 {
        return f64::NEG_INFINITY;
    }
    2.0 * n as f64 * a.abs().ln() - ln_fact + a * a
}

/// Smallest cutoff `N >= 1` with `(a^2)^N / N! * e^(a^2) <= eps`.
pub fn choose_cutoff(r_over_sigma: f64, eps: f64, max_cutoff: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !r_over_sigma.is_finite() {
        return Err(Error::InvalidArgument("r / sigma must be finite".into()));
    }
    let target = eps.ln();
    (1..=max_cutoff)
        .find(|&n| log_tail_bound(r_over_sigma, n) <= target)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "cutoff for r/sigma = {r_over_sigma} and eps = {eps:e} exceeds {max_cutoff}"
            ))
        })
}

impl TruncatedCoherentState {
    /// Normalized state on Fock levels `0..cutoff`.
    pub fn with_cutoff(r: f64, sigma: f64, cutoff: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if cutoff == 0 {
            return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
        }
        let a = r / sigma;
        let mut amplitudes = Vec::with_capacity(cutoff);
        let mut amp = 1.0;
        amplitudes.push(amp);
        for k in 1..cutoff {
            amp *= a / (k as f64).sqrt();
            amplitudes.push(amp);
        }
        let nrm = amplitudes.iter().map(|v| v * v).sum::<f64>().sqrt();
        amplitudes.iter_mut().for_each(|v| *v /= nrm);
        Ok(Self { r, sigma, amplitudes })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Inner product; levels beyond the shorter cutoff contribute zero.
    pub fn overlap(&self, other: &Self) -> Result<f64> {
        if self.sigma != other.sigma {
            return Err(Error::InvalidArgument(format!(
                "sigma mismatch: {} vs {}",
                self.sigma, other.sigma
            )));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a * b).sum())
    }
}

/// Truncate the coherent state of `r` at the smallest cutoff whose tail
/// bound is at most `eps`.
pub fn coherent_truncate(r: f64, sigma: f64, eps: f64) -> Result<TruncatedCoherentState> {
    coherent_truncate_capped(r, sigma, eps, DEFAULT_MAX_CUTOFF)
}

pub fn coherent_truncate_capped(r: f64, sigma: f64, eps: f64, max_cutoff: usize) -> Result<TruncatedCoherentState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let n = choose_cutoff(r / sigma, eps, max_cutoff)?;
    TruncatedCoherentState::with_cutoff(r, sigma, n)
}

/// Tensor product of per-coordinate truncated coherent states.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentVectorState {
    factors: Vec<TruncatedCoherentState>,
}

impl CoherentVectorState {
    pub fn new(x: &[f64], sigma: f64, eps: f64) -> Result<Self> {
        let factors = x
            .iter()
            .map(|&r| coherent_truncate(r, sigma, eps))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub fn with_cutoff(x: &[f64], sigma: f64, cutoff: usize) -> Result<Self> {
        let factors = x
            .iter()
            .map(|&r| TruncatedCoherentState::with_cutoff(r, sigma, cutoff))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[TruncatedCoherentState] {
        &self.factors
    }

    /// Dense amplitudes over the joint Fock register; the first coordinate is
    /// the most significant digit. All factors must share one cutoff.
    pub fn amplitudes(&self) -> Result<Vec<f64>> {
        let cutoff = self.factors.first().map_or(1, TruncatedCoherentState::cutoff);
        if self.factors.iter().any(|f| f.cutoff() != cutoff) {
            return Err(Error::InvalidArgument("factors have different cutoffs".into()));
        }
        Ok(self.factors.iter().fold(vec![1.0], |acc, f| {
            acc.iter()
                .flat_map(|a| f.amplitudes().iter().map(move |b| a * b))
                .collect()
        }))
    }
}

/// Product of per-coordinate overlaps.
pub fn coherent_overlap(a: &CoherentVectorState, b: &CoherentVectorState) -> Result<f64> {
    if a.factors.len() != b.factors.len() {
        return Err(Error::DimensionMismatch { expected: a.factors.len(), got: b.factors.len() });
    }
    a.factors
        .iter()
        .zip(&b.factors)
        .try_fold(1.0, |acc, (x, y)| Ok(acc * x.overlap(y)?))
}

/// Form `|Psi> = M^(-1/2) sum_t |t>|psi_t>` from truncated coherent states of
/// the samples and trace out the Fock register.
///
/// Samples are first shifted so the bounding box is centered on the origin;
/// the kernel is translation invariant and the shift keeps `|x|/sigma`, and
/// with it the cutoff, small.
pub fn build_rho_from_coherent(ds: &Dataset, sigma: f64, eps: f64) -> Result<DensityOperator> {
    let m = ds.len();
    if !m.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("sample count must be a power of two, got {m}")));
    }
    let n = ds.dim();
    let mut mid = vec![0.0; n];
    for (i, c) in mid.iter_mut().enumerate() {
        let (lo, hi) = ds
            .samples()
            .iter()
            .map(|s| s.x[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        *c = 0.5 * (lo + hi);
    }
    let centered: Vec<Vec<f64>> = ds
        .samples()
        .iter()
        .map(|s| s.x.iter().zip(&mid).map(|(v, c)| v - c).collect())
        .collect();
    let r_max = centered.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cutoff = choose_cutoff(r_max / sigma, eps, DEFAULT_MAX_CUTOFF)?;
    let fock_dim = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(cutoff));
    let total = fock_dim.and_then(|d| d.checked_mul(m));
    let (Some(fock_dim), Some(total)) = (fock_dim, total) else {
        return Err(Error::TooLarge("Fock register size overflows".into()));
    };
    if total > MAX_FOCK_AMPLITUDES {
        return Err(Error::TooLarge(format!(
            "|Psi> needs {m} x {cutoff}^{n} = {total} amplitudes (cap {MAX_FOCK_AMPLITUDES}); use a larger eps"
        )));
    }
    let scale = (m as f64).sqrt().recip();
    let mut psi = DMatrix::zeros(m, fock_dim);
    for (t, x) in centered.iter().enumerate() {
        let amps = CoherentVectorState::with_cutoff(x, sigma, cutoff)?.amplitudes()?;
        psi.row_mut(t).iter_mut().zip(amps).for_each(|(p, a)| *p = scale * a);
    }
    // Tr_2 |Psi><Psi| has entries <psi_t|psi_s> / M.
    let rho = &psi * psi.transpose();
    Ok(DensityOperator { rho })
}
