//! Graph-to-graph transformation models: adjacency thresholding, GCN
//! encoder, dot-product topology decoder, target-decode loss, manual
//! backprop, training, and graph adaptation for unequal orders.

mod adapt;
mod grad;
mod loss;
mod model;
mod train;

pub use adapt::{adapt_pair, AdaptationRecord, AdaptedGraph};
pub use grad::grad_total_loss;
pub use loss::{feature_loss, sparsity_weight, topology_loss, total_loss, PROB_CLAMP};
pub use model::{
    adjacency_from_graph, adjacency_from_weights, decode, encode_with, G2GModel, G2GOutput,
};
pub use train::{slice_windows, train_g2g, ModelMeta, TrainConfig, TrainPair, TrainingReport};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, PartialEq)]
pub enum G2gError {
    #[error("threshold delta must lie in (0, 1), got {delta}")]
    BadThreshold { delta: f64 },
    #[error("lambda must be non-negative, got {lambda}")]
    BadLambda { lambda: f64 },
    #[error("bad optimizer settings: learning_rate {learning_rate}, momentum {momentum}")]
    BadOptimizer { learning_rate: f64, momentum: f64 },
    #[error("encoder has no layers")]
    NoLayers,
    #[error("encoder expected a {}x{} input, got {}x{}", expected.0, expected.1, got.0, got.1)]
    EncodeShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("loss shapes differ: {}x{} vs {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    LossShape {
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("adaptation record covers {expected} source features, matrix has {got} rows")]
    AdaptationShape { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error(
        "pair shapes inconsistent: expected {}x{}, x_source {}x{}, x_target {}x{}",
        expected.0, expected.1, x_source.0, x_source.1, x_target.0, x_target.1
    )]
    PairShapeMismatch {
        expected: (usize, usize),
        x_source: (usize, usize),
        x_target: (usize, usize),
    },
    #[error("all pairs of a training run must share the same source adjacency")]
    InconsistentSourceAdjacency,
    #[error("cannot slice windows of {window} (stride {stride}) from length {len}")]
    BadWindowing {
        window: usize,
        stride: usize,
        len: usize,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
