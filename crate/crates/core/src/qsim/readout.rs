//! Hadamard-test readout of the network output `<w(theta)|f(x)>`.
//!
//! The ancilla is the most significant qubit (index `m`). The circuit
//! prepares `(sqrt(R)|0>|f(x)> + |1>|0..0>) / sqrt(R+1)`, applies `U(theta)`
//! to the register when the ancilla is `|0>`, then a Hadamard on the ancilla.
//! With `a = <w|f(x)>` the two monitored outcomes have probabilities
//!
//! * `|0>|0..0>`: `(sqrt(R) a + 1)^2 / (2(R+1))`
//! * `|1>|0..0>`: `(sqrt(R) a - 1)^2 / (2(R+1))`
//!
//! so `a = (p0 - p1)(R+1) / (2 sqrt(R))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::state::{apply_controlled_weight_unitary, QubitState, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::tensorweight::TensorWeights;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    /// Read the probabilities off the state vector.
    Exact,
    /// Sample this many measurement outcomes.
    Count(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutResult {
    /// Probability (or frequency) of `|0>|0..0>`.
    pub p_plus: f64,
    /// Probability (or frequency) of `|1>|0..0>`.
    pub p_minus: f64,
    /// Recovered `<w(theta)|f(x)>`.
    pub estimate: f64,
    /// Squared feature norm `R` of the input.
    pub norm_sq: f64,
    pub shots: Shots,
}

/// Invert the two outcome probabilities into the signed overlap.
pub fn invert_readout(p_plus: f64, p_minus: f64, norm_sq: f64) -> f64 {
    (p_plus - p_minus) * (norm_sq + 1.0) / (2.0 * norm_sq.sqrt())
}

/// The augmented input state on `m + 1` qubits.
pub fn augmented_state(x: &[f64], model: &KernelModel) -> Result<(QubitState, f64)> {
    let (f, r) = model.feature_state(x)?;
    let dim = f.len();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("center count {dim} is not a power of two")));
    }
    let norm = (r + 1.0).sqrt().recip();
    let mut amps = vec![0.0; 2 * dim];
    for (a, v) in amps.iter_mut().zip(&f) {
        *a = r.sqrt() * v * norm;
    }
    amps[dim] = norm;
    let state = QubitState::new(amps.into_iter().map(|a| num_complex::Complex64::new(a, 0.0)).collect())?;
    Ok((state, r))
}

pub fn hadamard_test_readout(
    theta: &TensorWeights,
    x: &[f64],
    model: &KernelModel,
    shots: Shots,
    seed: u64,
) -> Result<ReadoutResult> {
    if let Shots::Count(0) = shots {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let m = theta.len();
    if model.len() != 1usize << m.min(usize::BITS as usize - 1) {
        return Err(Error::DimensionMismatch { expected: 1 << m.min(usize::BITS as usize - 1), got: model.len() });
    }
    if m + 1 > MAX_QUBITS {
        return Err(Error::TooLarge(format!("{} qubits exceeds the {MAX_QUBITS}-qubit cap", m + 1)));
    }
    let (mut state, r) = augmented_state(x, model)?;
    apply_controlled_weight_unitary(theta, &mut state, m, false)?;
    state.hadamard(m);
    let p0 = state.probability(0);
    let p1 = state.probability(1 << m);
    let (p_plus, p_minus) = match shots {
        Shots::Exact => (p0, p1),
        Shots::Count(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n0 = Binomial::new(n, p0.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(&mut rng);
            let rest = 1.0 - p0;
            let cond = if rest > 0.0 { (p1 / rest).clamp(0.0, 1.0) } else { 0.0 };
            let n1 = Binomial::new(n - n0, cond)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(&mut rng);
            (n0 as f64 / n as f64, n1 as f64 / n as f64)
        }
    };
    Ok(ReadoutResult { p_plus, p_minus, estimate: invert_readout(p_plus, p_minus, r), norm_sq: r, shots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, PatternFamily, PatternSpec};

    fn setup(m: usize) -> (KernelModel, TensorWeights) {
        let ds = generate(&PatternSpec::new(PatternFamily::Annulus, 1 << m, 0.05, 3)).unwrap();
        (KernelModel::fit(&ds).unwrap(), TensorWeights::random(m, 9).unwrap())
    }

    #[test]
    fn exact_readout_matches_classical_overlap() {
        let (model, w) = setup(5);
        for x in [[0.1, 0.2], [-0.4, 0.3], [0.0, -0.05]] {
            let res = hadamard_test_readout(&w, &x, &model, Shots::Exact, 0).unwrap();
            let (f, r) = model.feature_state(&x).unwrap();
            let a = w.fast_inner(&f).unwrap();
            assert!((res.estimate - a).abs() <= 1e-10);
            let expect_plus = (r.sqrt() * a + 1.0).powi(2) / (2.0 * (r + 1.0));
            let expect_minus = (r.sqrt() * a - 1.0).powi(2) / (2.0 * (r + 1.0));
            assert!((res.p_plus - expect_plus).abs() < 1e-12);
            assert!((res.p_minus - expect_minus).abs() < 1e-12);
            let total = (r * a * a + 1.0) / (r + 1.0);
            assert!((res.p_plus + res.p_minus - total).abs() < 1e-12 && total <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn inversion_is_exact() {
        for r in [0.01f64, 0.5, 1.0, 7.0, 300.0] {
            for a in [-1.0, -0.3, 0.0, 0.8, 1.0] {
                let p = |s: f64| (r.sqrt() * a + s).powi(2) / (2.0 * (r + 1.0));
                assert!((invert_readout(p(1.0), p(-1.0), r) - a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shot_mode_is_seeded() {
        let (model, w) = setup(4);
        let a = hadamard_test_readout(&w, &[0.1, 0.1], &model, Shots::Count(1000), 5).unwrap();
        let b = hadamard_test_readout(&w, &[0.1, 0.1], &model, Shots::Count(1000), 5).unwrap();
        assert_eq!(a, b);
        assert!(a.p_plus + a.p_minus <= 1.0);
        assert!(hadamard_test_readout(&w, &[0.1, 0.1], &model, Shots::Count(0), 5).is_err());
    }

    #[test]
    fn readout_checks_register_size() {
        let (model, _) = setup(4);
        let w = TensorWeights::random(3, 1).unwrap();
        assert!(hadamard_test_readout(&w, &[0.0, 0.0], &model, Shots::Exact, 0).is_err());
    }
}
