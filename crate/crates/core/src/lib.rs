//! Radial basis function classifiers whose hidden-layer weights are a tensor
//! product of `m` unit 2-vectors, so a network over `M = 2^m` Gaussian centers
//! is trained through only `m` angles.
//!
//! The crate contains
//!
//! * [`dataset`]: synthetic 2-D benchmark patterns and CSV persistence,
//! * [`kernel`]: Gaussian feature maps, the width heuristic, Gram matrix and
//!   the kernel density operator,
//! * [`tensorweight`]: the tensor-product weight vector and its contractions,
//! * [`train`]: loss, gradient, Hessian, gradient-descent and damped-Newton
//!   trainers, plus the full-weight least-squares baseline,
//! * [`qsim`]: a dense state-vector emulation of the circuit formulation
//!   (coherent-state kernel preparation, RY weight unitary, Hadamard-test
//!   readout and the training quantities),
//! * [`svm`]: the hard-margin kernel SVM dual and its tensor-weight variant,
//! * [`experiment`]: metrics, benchmark runs, sweeps, decision grids and
//!   reports.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod qsim;
pub mod svm;
pub mod tensorweight;
pub mod train;

mod linalg;

pub use dataset::{Dataset, Label, PatternFamily, PatternSpec, Sample};
pub use error::{Error, Result};
pub use kernel::{DensityOperator, KernelModel};
pub use tensorweight::TensorWeights;
pub use train::{LossConfig, Method, TrainReport};
