//! Deterministic dense-math layer: matrix kernels, seeded randomness,
//! momentum SGD, k-means, small linear solves, special functions, and the
//! finite-difference gradient oracle.
//!
//! Everything here is a pure function of its inputs (plus an explicit RNG),
//! generic over the scalar type, and safe to call concurrently on disjoint
//! data.

mod gradcheck;
mod kmeans;
mod matrix;
mod optim;
mod rng;
mod solve;
pub mod special;

pub use gradcheck::{finite_diff_grad, grads_close};
pub use kmeans::{kmeans, KmeansOutcome};
pub use matrix::{sigmoid_scalar, Matrix};
pub use optim::OptimizerState;
pub use rng::{random_normal, random_uniform, xavier_uniform, SeededRng};
pub use solve::solve;

use thiserror::Error;

/// Errors from the dense-math layer.
#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("{op}: dimension mismatch {}x{} vs {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("value buffer of length {len} cannot fill a {rows}x{cols} matrix")]
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("rows have unequal lengths")]
    RaggedRows,
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("parameter/gradient count mismatch: {params} vs {grads}")]
    ParamCountMismatch { params: usize, grads: usize },
    #[error("k = {k} out of range for {items} items")]
    KOutOfRange { k: usize, items: usize },
    #[error("singular linear system")]
    SingularSystem,
}
