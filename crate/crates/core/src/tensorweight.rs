//! Tensor-product weight vectors `w(theta) = (cos θ_m, sin θ_m) ⊗ ... ⊗ (cos θ_1, sin θ_1)`.
//!
//! Bit convention: angle `theta[j]` (zero-based) pairs with bit `j` of the
//! weight index, so `theta[0]` controls the least-significant bit and
//! `w_t = prod_j cos(theta[j] - t_j * pi / 2)` with `t = sum_j t_j 2^j`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest `m` for which [`TensorWeights::materialize`] builds the dense vector.
pub const MAX_MATERIALIZE_QUBITS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorWeights {
    theta: Vec<f64>,
}

impl TensorWeights {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("tensor weights need at least one angle".into()));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite angle".into()));
        }
        Ok(Self { theta })
    }

    /// Angles drawn uniformly from `[0, 2 pi)`.
    pub fn random(m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..m).map(|_| rng.random::<f64>() * TAU).collect())
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    /// Number of angles `m`.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Length `2^m` of the induced weight vector.
    pub fn dim(&self) -> usize {
        1usize << self.theta.len()
    }

    pub fn weight_entry(&self, t: usize) -> Result<f64> {
        if self.len() >= usize::BITS as usize || t >= self.dim() {
            return Err(Error::IndexOutOfRange { index: t, len: self.dim() });
        }
        Ok(self
            .theta
            .iter()
            .enumerate()
            .map(|(j, th)| if (t >> j) & 1 == 0 { th.cos() } else { th.sin() })
            .product())
    }

    /// Dense `2^m` weight vector.
    pub fn materialize(&self) -> Result<Vec<f64>> {
        if self.len() > MAX_MATERIALIZE_QUBITS {
            return Err(Error::TooLarge(format!(
                "materializing 2^{} weights exceeds the 2^{MAX_MATERIALIZE_QUBITS} cap",
                self.len()
            )));
        }
        let mut w = Vec::with_capacity(self.dim());
        w.push(1.0);
        for th in &self.theta {
            let (s, c) = th.sin_cos();
            let half = w.len();
            w.extend_from_within(..);
            w[..half].iter_mut().for_each(|v| *v *= c);
            w[half..].iter_mut().for_each(|v| *v *= s);
        }
        Ok(w)
    }

    /// `w(theta) · v` in `O(2^m)` by contracting one factor per stage.
    pub fn fast_inner(&self, v: &[f64]) -> Result<f64> {
        if self.len() >= usize::BITS as usize || v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let (s0, c0) = self.theta[0].sin_cos();
        let mut buf: Vec<f64> = v.chunks_exact(2).map(|p| c0 * p[0] + s0 * p[1]).collect();
        for th in &self.theta[1..] {
            let (s, c) = th.sin_cos();
            let half = buf.len() / 2;
            for i in 0..half {
                buf[i] = c * buf[2 * i] + s * buf[2 * i + 1];
            }
            buf.truncate(half);
        }
        Ok(buf[0])
    }

    /// Weights with `theta[j]` advanced by `delta`.
    pub fn shifted(&self, j: usize, delta: f64) -> Result<Self> {
        if j >= self.len() {
            return Err(Error::IndexOutOfRange { index: j, len: self.len() });
        }
        let mut theta = self.theta.clone();
        theta[j] += delta;
        Ok(Self { theta })
    }

    /// `∂w/∂theta[j]`, which is again a tensor of unit 2-vectors: the same
    /// weights with `theta[j] + pi/2`.
    pub fn shift_derivative(&self, j: usize) -> Result<Self> {
        self.shifted(j, FRAC_PI_2)
    }

    /// `∂²w/∂theta[j]∂theta[k]`: two quarter-turn shifts, or a half turn when
    /// `j == k`.
    pub fn second_shift_derivative(&self, j: usize, k: usize) -> Result<Self> {
        if j == k {
            self.shifted(j, PI)
        } else {
            self.shifted(j, FRAC_PI_2)?.shifted(k, FRAC_PI_2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
    }

    /// Standard big-endian Kronecker product `a_m ⊗ ... ⊗ a_1`.
    fn dense_oracle(theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .fold(vec![1.0], |acc, th| kron(&[th.cos(), th.sin()], &acc))
    }

    #[test]
    fn entries_at_zero_and_quarter() {
        let w = TensorWeights::new(vec![0.0; 4]).unwrap();
        assert_eq!(w.weight_entry(0).unwrap(), 1.0);
        for t in 1..16 {
            assert_eq!(w.weight_entry(t).unwrap(), 0.0);
        }
        let w = TensorWeights::new(vec![PI / 4.0; 5]).unwrap();
        for t in 0..32 {
            assert!((w.weight_entry(t).unwrap() - 0.5f64.sqrt().powi(5)).abs() < 1e-15);
        }
        assert!(w.weight_entry(32).is_err());
    }

    #[test]
    fn entries_match_kronecker() {
        let theta = [0.3, -1.2, 2.5, 0.9];
        let w = TensorWeights::new(theta.to_vec()).unwrap();
        let dense = dense_oracle(&theta);
        for (t, d) in dense.iter().enumerate() {
            assert!((w.weight_entry(t).unwrap() - d).abs() < 1e-15);
        }
    }

    #[test]
    fn little_endian_convention() {
        // Only bit 0 may carry weight: theta[0] = pi/2 puts everything on t = 1, not t = 2^(m-1).
        let w = TensorWeights::new(vec![FRAC_PI_2, 0.0, 0.0]).unwrap();
        let v = w.materialize().unwrap();
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!(v[4].abs() < 1e-15);
    }

    #[test]
    fn materialize_single() {
        let v = TensorWeights::new(vec![FRAC_PI_2]).unwrap().materialize().unwrap();
        assert!(v[0].abs() < 1e-16 && (v[1] - 1.0).abs() < 1e-16);
        let big = TensorWeights::new(vec![0.1; MAX_MATERIALIZE_QUBITS + 1]).unwrap();
        assert!(big.materialize().is_err());
    }

    #[test]
    fn fast_inner_simple_cases() {
        let w = TensorWeights::new(vec![0.0; 3]).unwrap();
        let v: Vec<f64> = (0..8).map(|i| i as f64 + 0.5).collect();
        assert_eq!(w.fast_inner(&v).unwrap(), 0.5);
        let w = TensorWeights::new(vec![0.4, 1.3, -2.0]).unwrap();
        let own = w.materialize().unwrap();
        assert!((w.fast_inner(&own).unwrap() - 1.0).abs() < 1e-12);
        assert!(w.fast_inner(&v[..4]).is_err());
    }

    #[test]
    fn derivative_single_angle() {
        let d = TensorWeights::new(vec![0.0]).unwrap().shift_derivative(0).unwrap();
        let v = d.materialize().unwrap();
        assert!(v[0].abs() < 1e-16 && (v[1] - 1.0).abs() < 1e-16);
        assert!(TensorWeights::new(vec![0.0]).unwrap().shift_derivative(1).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let theta = vec![0.7, -0.4, 2.1, 1.1];
        let w = TensorWeights::new(theta.clone()).unwrap();
        let h = 1e-5;
        for j in 0..4 {
            let d = w.shift_derivative(j).unwrap().materialize().unwrap();
            let plus = w.shifted(j, h).unwrap().materialize().unwrap();
            let minus = w.shifted(j, -h).unwrap().materialize().unwrap();
            let norm: f64 = d.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-13);
            for t in 0..16 {
                let fd = (plus[t] - minus[t]) / (2.0 * h);
                assert!((d[t] - fd).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn random_is_seeded_and_in_range() {
        let a = TensorWeights::random(6, 11).unwrap();
        assert_eq!(a, TensorWeights::random(6, 11).unwrap());
        assert!(a.theta().iter().all(|t| (0.0..TAU).contains(t)));
        assert!(TensorWeights::random(0, 1).is_err());
    }

    proptest! {
        #[test]
        fn unit_norm(theta in prop::collection::vec(-10.0f64..10.0, 1..10)) {
            let v = TensorWeights::new(theta).unwrap().materialize().unwrap();
            let n: f64 = v.iter().map(|x| x * x).sum();
            prop_assert!((n - 1.0).abs() < 1e-13);
        }

        #[test]
        fn periodic(theta in prop::collection::vec(-3.0f64..3.0, 1..8), j in 0usize..8) {
            let w = TensorWeights::new(theta).unwrap();
            let j = j % w.len();
            let a = w.materialize().unwrap();
            let b = w.shifted(j, TAU).unwrap().materialize().unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-14);
            }
        }

        #[test]
        fn fast_inner_matches_dense(
            theta in prop::collection::vec(-PI..PI, 1..=12),
            seed in any::<u64>(),
        ) {
            let w = TensorWeights::new(theta).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..w.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dense: f64 = w.materialize().unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
            let scale: f64 = w.materialize().unwrap().iter().zip(&v).map(|(a, b)| (a * b).abs()).sum();
            prop_assert!((w.fast_inner(&v).unwrap() - dense).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
