//! The graph-to-graph transformation model: thresholded adjacency, GCN
//! encoder, dot-product topology decoder.

use serde::{Deserialize, Serialize};

use super::adapt::AdaptationRecord;
use super::G2gError;
use crate::entity_graph::EntityGraph;
use crate::{Mat, Real};

/// Binary adjacency from an entity graph: a_ij = 1 iff |E_ij| > delta.
/// The diagonal is always 1 since E_ii = 1.
pub fn adjacency_from_graph(graph: &EntityGraph, delta: Real) -> Result<Mat, G2gError> {
    adjacency_from_weights(&graph.arc_weights, delta)
}

/// Same thresholding applied to a raw arc-weight matrix (used for adapted
/// graphs, whose weight matrix may be asymmetric).
pub fn adjacency_from_weights(weights: &Mat, delta: Real) -> Result<Mat, G2gError> {
    check_threshold(delta)?;
    Ok(weights.map(|w| if w.abs() > delta { 1.0 } else { 0.0 }))
}

pub(crate) fn check_threshold(delta: Real) -> Result<(), G2gError> {
    if delta <= 0.0 || delta >= 1.0 {
        return Err(G2gError::BadThreshold { delta });
    }
    Ok(())
}

/// Trained G2G transformation model for one directed arc of the system
/// graph. Maps an adapted source feature matrix to a predicted target
/// feature matrix and topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2GModel {
    pub source_type: String,
    pub target_type: String,
    /// [input T, hidden dims.., output F]; F equals T so decoded features
    /// compare directly against target features.
    pub layer_dims: Vec<usize>,
    /// One weight matrix per layer, W^i of shape layer_dims[i] x layer_dims[i+1].
    pub weights: Vec<Mat>,
    pub delta: Real,
    /// Frozen adapted-source adjacency (binary, unit diagonal, N x N).
    pub adjacency: Mat,
    pub adaptation: AdaptationRecord,
}

/// Decoder output: predicted features, arc probabilities, and the
/// thresholded topology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct G2GOutput {
    /// Z: predicted target feature matrix (N x F).
    pub features: Mat,
    /// P = sigmoid(Z Z^T), entries strictly inside (0, 1).
    pub probabilities: Mat,
    /// Binary decoded adjacency, 1 where P > delta (strict).
    pub adjacency: Mat,
}

impl G2GModel {
    pub fn order(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn window(&self) -> usize {
        self.layer_dims[0]
    }

    /// GCN encoder: H^1 = ReLU(A X W^0), H^i = ReLU(A H^{i-1} W^{i-1}),
    /// final layer without activation: Z = A H^{l-2} W^{l-2}.
    pub fn encode(&self, x: &Mat) -> Result<Mat, G2gError> {
        encode_with(&self.weights, &self.adjacency, x)
    }

    /// Encode then decode.
    pub fn apply(&self, x_adapted: &Mat) -> Result<G2GOutput, G2gError> {
        let z = self.encode(x_adapted)?;
        decode(&z, self.delta)
    }
}

/// Encoder on explicit weights (shared with the training loop, which works
/// on weights not yet wrapped in a model).
pub fn encode_with(weights: &[Mat], adjacency: &Mat, x: &Mat) -> Result<Mat, G2gError> {
    if weights.is_empty() {
        return Err(G2gError::NoLayers);
    }
    if x.rows() != adjacency.rows() || weights[0].rows() != x.cols() {
        return Err(G2gError::EncodeShape {
            expected: (adjacency.rows(), weights[0].rows()),
            got: x.shape(),
        });
    }
    let mut h = x.clone();
    let last = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        let pre = adjacency.matmul(&h)?.matmul(w)?;
        h = if i < last { pre.relu() } else { pre };
    }
    Ok(h)
}

/// Dot-product decoder: P = sigmoid(Z Z^T); adjacency = 1 where P > delta.
pub fn decode(z: &Mat, delta: Real) -> Result<G2GOutput, G2gError> {
    check_threshold(delta)?;
    let probabilities = z.matmul(&z.transpose())?.sigmoid();
    let adjacency = probabilities.map(|p| if p > delta { 1.0 } else { 0.0 });
    Ok(G2GOutput {
        features: z.clone(),
        probabilities,
        adjacency,
    })
}
