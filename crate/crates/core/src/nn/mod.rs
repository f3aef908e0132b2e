//! Dense feed-forward network engine: matrices, layers with exact
//! backpropagation, softmax cross-entropy, momentum SGD and a
//! finite-difference gradient checker.

mod gradcheck;
mod loss;
mod matrix;
mod network;
mod optim;

pub use gradcheck::{
    check_gradient, grad_check, max_relative_error, numeric_gradient, relative_error, FD_STEP, RELATIVE_FLOOR,
};
pub use loss::{softmax, softmax_xent};
pub use matrix::DenseMatrix;
pub use network::{backward, forward, predict, Activation, ForwardTrace, Layer, LayerSpec, ParameterSet};
pub use optim::Sgd;
