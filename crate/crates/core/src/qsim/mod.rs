//! Exact numerical emulation of the circuit formulation of the network.
//!
//! The kernel density operator is not unitary; where the circuit would use a
//! block encoding of it, the emulator multiplies by the explicit matrix.

pub mod coherent;
pub mod readout;
pub mod state;

pub use coherent::{
    build_rho_from_coherent, coherent_overlap, coherent_truncate, CoherentVectorState, TruncatedCoherentState,
};
pub use readout::{hadamard_test_readout, ReadoutResult, Shots};
pub use state::{apply_weight_unitary, apply_weight_unitary_adjoint, weight_state, QubitState};

use nalgebra::DVector;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::tensorweight::TensorWeights;

/// The two quantities whose difference drives the gradient step for angle
/// `j`, evaluated on state vectors:
///
/// * `q1 = <0| U(theta) rho diag(M^2 / R_t) rho U_j(theta)^† |0>`
/// * `q2 = <0| U_j(theta) rho sum_t (M r_t / sqrt(R_t)) |t>`
///
/// where `U_j` is `U` with `theta_j + pi/2`. `q1 - q2` equals `M` times the
/// `j`-th gradient component of the normalized-feature loss. `ds` must be the
/// training set whose samples are the model's centers.
pub fn grad_quantities(theta: &TensorWeights, j: usize, model: &KernelModel, ds: &Dataset) -> Result<(f64, f64)> {
    let m_count = model.len();
    if ds.len() != m_count {
        return Err(Error::DimensionMismatch { expected: m_count, got: ds.len() });
    }
    if theta.dim() != m_count {
        return Err(Error::DimensionMismatch { expected: m_count, got: theta.dim() });
    }
    let shifted = theta.shift_derivative(j)?;
    let w = DVector::from_vec(weight_state(theta)?.real_parts());
    let dw = DVector::from_vec(weight_state(&shifted)?.real_parts());
    let rho = &model.density_operator().rho;
    let mf = m_count as f64;
    let scale = DVector::from_iterator(m_count, model.row_norms().iter().map(|r| mf * mf / r));
    let right = rho * &dw;
    let q1 = (rho * w).dot(&scale.component_mul(&right));
    let label_state = DVector::from_iterator(
        m_count,
        ds.samples().iter().zip(model.row_norms()).map(|(s, r)| mf * s.r() / r.sqrt()),
    );
    let q2 = dw.dot(&(rho * label_state));
    Ok((q1, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate, PatternFamily, PatternSpec};
    use crate::train::{LossConfig, TensorObjective};

    #[test]
    fn difference_is_scaled_gradient() {
        for seed in 0..4 {
            let ds = generate(&PatternSpec::new(PatternFamily::XorQuadrants, 32, 0.05, seed)).unwrap();
            let model = KernelModel::fit(&ds).unwrap();
            let w = TensorWeights::random(5, seed + 100).unwrap();
            let cfg = LossConfig::default();
            let g = crate::train::gradient(&w, &model, &ds, &cfg).unwrap();
            for (j, gj) in g.iter().enumerate() {
                let (q1, q2) = grad_quantities(&w, j, &model, &ds).unwrap();
                let lhs = q1 - q2;
                assert!((lhs - 32.0 * gj).abs() <= 1e-10 * lhs.abs().max(1e-3), "{lhs} vs {}", 32.0 * gj);
            }
        }
    }

    #[test]
    fn second_quantity_vanishes_with_labels() {
        // q2 is linear in the labels, and labels are restricted to +-1, so
        // q2(r) + q2(-r) = q2(0) = 0.
        let ds = generate(&PatternSpec::new(PatternFamily::Blobs, 16, 0.05, 1)).unwrap();
        let model = KernelModel::fit(&ds).unwrap();
        let w = TensorWeights::random(4, 3).unwrap();
        let (_, a) = grad_quantities(&w, 1, &model, &ds).unwrap();
        let (_, b) = grad_quantities(&w, 1, &model, &ds.flipped()).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn quantities_agree_at_constructed_minimum() {
        // With targets equal to the predictions the residual vanishes, so the
        // first quantity equals the second one computed with those targets.
        let ds = generate(&PatternSpec::new(PatternFamily::Annulus, 16, 0.05, 2)).unwrap();
        let model = KernelModel::fit(&ds).unwrap();
        let w = TensorWeights::random(4, 5).unwrap();
        let obj = TensorObjective::new(&model, &ds, true).unwrap();
        let preds = obj.predictions(&w).unwrap();
        let mf = 16.0;
        let rho = &model.density_operator().rho;
        let targets = DVector::from_iterator(
            16,
            preds.iter().zip(model.row_norms()).map(|(p, r)| mf * p / r.sqrt()),
        );
        for j in 0..4 {
            let (q1, _) = grad_quantities(&w, j, &model, &ds).unwrap();
            let dw = DVector::from_vec(weight_state(&w.shift_derivative(j).unwrap()).unwrap().real_parts());
            let q2 = dw.dot(&(rho * &targets));
            assert!((q1 - q2).abs() < 1e-12);
        }
    }
}
