//! Dense state vectors. Qubit `j` is bit `j` of the basis index, matching the
//! tensor-weight bit convention.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensorweight::TensorWeights;

/// Largest register the emulator will allocate.
pub const MAX_QUBITS: usize = 21;

pub type Gate2 = [[Complex64; 2]; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct QubitState {
    amps: Vec<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl QubitState {
    /// Wrap amplitudes whose length is a power of two and whose norm is 1.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!("state length {} is not a power of two", amps.len())));
        }
        if amps.len().trailing_zeros() as usize > MAX_QUBITS {
            return Err(Error::TooLarge(format!("more than {MAX_QUBITS} qubits")));
        }
        let nrm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state norm is {nrm}, expected 1")));
        }
        Ok(Self { amps })
    }

    /// Normalize a real vector into a state.
    pub fn from_real(v: &[f64]) -> Result<Self> {
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::Degenerate("zero vector has no state".into()));
        }
        Self::new(v.iter().map(|x| c(x / nrm)).collect())
    }

    /// `|0...0>` on `q` qubits.
    pub fn zero(q: usize) -> Result<Self> {
        if q > MAX_QUBITS {
            return Err(Error::TooLarge(format!("more than {MAX_QUBITS} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << q];
        amps[0] = c(1.0);
        Ok(Self { amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    /// Apply a one-qubit gate, optionally only on the branch where `control`
    /// holds `value`.
    pub fn apply(&mut self, target: usize, gate: &Gate2, control: Option<(usize, bool)>) {
        let stride = 1usize << target;
        for base in 0..self.amps.len() {
            if base & stride != 0 {
                continue;
            }
            if let Some((q, value)) = control {
                if ((base >> q) & 1 == 1) != value {
                    continue;
                }
            }
            let a0 = self.amps[base];
            let a1 = self.amps[base | stride];
            self.amps[base] = gate[0][0] * a0 + gate[0][1] * a1;
            self.amps[base | stride] = gate[1][0] * a0 + gate[1][1] * a1;
        }
    }

    pub fn hadamard(&mut self, target: usize) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        self.apply(target, &[[c(h), c(h)], [c(h), c(-h)]], None);
    }
}

/// `exp(i Y theta) = [[cos, sin], [-sin, cos]]`.
pub fn ry_gate(theta: f64) -> Gate2 {
    let (s, co) = theta.sin_cos();
    [[c(co), c(s)], [c(-s), c(co)]]
}

fn ry_gate_adjoint(theta: f64) -> Gate2 {
    let (s, co) = theta.sin_cos();
    [[c(co), c(-s)], [c(s), c(co)]]
}

fn check_register(theta: &TensorWeights, qubits: usize) -> Result<()> {
    if qubits < theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: qubits });
    }
    Ok(())
}

/// `U(theta) = ⊗_j exp(i Y theta_j)` on an `m`-qubit state. The amplitude of
/// `|0...0>` afterwards is `<w(theta)|state>`.
pub fn apply_weight_unitary(theta: &TensorWeights, state: &QubitState) -> Result<QubitState> {
    if state.num_qubits() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: state.num_qubits() });
    }
    let mut out = state.clone();
    for (j, th) in theta.theta().iter().enumerate() {
        out.apply(j, &ry_gate(*th), None);
    }
    Ok(out)
}

/// `U(theta)^dagger`; applied to `|0...0>` it prepares `|w(theta)>`.
pub fn apply_weight_unitary_adjoint(theta: &TensorWeights, state: &QubitState) -> Result<QubitState> {
    if state.num_qubits() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: state.num_qubits() });
    }
    let mut out = state.clone();
    for (j, th) in theta.theta().iter().enumerate() {
        out.apply(j, &ry_gate_adjoint(*th), None);
    }
    Ok(out)
}

/// `U(theta)` on qubits `0..m`, fired only where qubit `control` equals
/// `value`.
pub fn apply_controlled_weight_unitary(
    theta: &TensorWeights,
    state: &mut QubitState,
    control: usize,
    value: bool,
) -> Result<()> {
    check_register(theta, control)?;
    if control >= state.num_qubits() {
        return Err(Error::IndexOutOfRange { index: control, len: state.num_qubits() });
    }
    for (j, th) in theta.theta().iter().enumerate() {
        state.apply(j, &ry_gate(*th), Some((control, value)));
    }
    Ok(())
}

/// `|w(theta)>` as a state.
pub fn weight_state(theta: &TensorWeights) -> Result<QubitState> {
    apply_weight_unitary_adjoint(theta, &QubitState::zero(theta.len())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(q: usize, seed: u64) -> QubitState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..1 << q).map(|_| rng.random_range(-1.0..1.0)).collect();
        QubitState::from_real(&v).unwrap()
    }

    #[test]
    fn zero_angles_are_identity() {
        let s = random_state(4, 1);
        let w = TensorWeights::new(vec![0.0; 4]).unwrap();
        assert_eq!(apply_weight_unitary(&w, &s).unwrap(), s);
    }

    #[test]
    fn weight_state_maps_to_zero() {
        let w = TensorWeights::new(vec![0.3, -1.1, 2.4]).unwrap();
        let s = QubitState::from_real(&w.materialize().unwrap()).unwrap();
        let out = apply_weight_unitary(&w, &s).unwrap();
        assert!((out.amplitude(0).re - 1.0).abs() < 1e-12);
        let ws = weight_state(&w).unwrap();
        for (a, b) in ws.real_parts().iter().zip(w.materialize().unwrap()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_amplitude_is_weight_overlap() {
        let w = TensorWeights::random(6, 3).unwrap();
        let s = random_state(6, 4);
        let out = apply_weight_unitary(&w, &s).unwrap();
        let expect = w.fast_inner(&s.real_parts()).unwrap();
        assert!((out.amplitude(0).re - expect).abs() <= 1e-12);
        assert!(out.amplitude(0).im.abs() <= 1e-15);
        assert!((out.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn qubit_count_checked() {
        let w = TensorWeights::new(vec![0.1; 3]).unwrap();
        assert!(apply_weight_unitary(&w, &random_state(4, 5)).is_err());
        assert!(QubitState::zero(MAX_QUBITS + 1).is_err());
        assert!(QubitState::new(vec![c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn controlled_unitary_acts_on_one_branch() {
        let w = TensorWeights::new(vec![0.7, 0.2]).unwrap();
        let mut s = random_state(3, 6);
        let before = s.clone();
        apply_controlled_weight_unitary(&w, &mut s, 2, false).unwrap();
        assert_eq!(&s.amplitudes()[4..], &before.amplitudes()[4..]);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_is_involution() {
        let mut s = random_state(3, 7);
        let before = s.clone();
        s.hadamard(1);
        s.hadamard(1);
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
