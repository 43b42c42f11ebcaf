//! Analytic gradients of the target-decode loss with respect to every
//! encoder weight matrix.
//!
//! The loss is evaluated on probabilities P = sigmoid(Z Z^T); the binary
//! decode indicator is inference-only and never differentiated. Clamped
//! probability entries contribute zero gradient, matching the derivative
//! of the actual (clamped) loss the finite-difference oracle sees.

use super::loss::{feature_loss, sparsity_weight, topology_loss, PROB_CLAMP};
use super::G2gError;
use crate::{Mat, Real};

/// Cached forward pass: hidden states, pre-activations, and the aggregated
/// inputs A*H^i reused by the backward pass.
struct ForwardTrace {
    /// hiddens[0] = X, hiddens[i+1] = output of layer i.
    hiddens: Vec<Mat>,
    /// pre[i] = A * hiddens[i] * W^i before any activation.
    pre_activations: Vec<Mat>,
    /// aggregated[i] = A * hiddens[i].
    aggregated: Vec<Mat>,
}

fn forward_trace(weights: &[Mat], adjacency: &Mat, x: &Mat) -> Result<ForwardTrace, G2gError> {
    if weights.is_empty() {
        return Err(G2gError::NoLayers);
    }
    if x.rows() != adjacency.rows() || weights[0].rows() != x.cols() {
        return Err(G2gError::EncodeShape {
            expected: (adjacency.rows(), weights[0].rows()),
            got: x.shape(),
        });
    }
    let last = weights.len() - 1;
    let mut hiddens = vec![x.clone()];
    let mut pre_activations = Vec::with_capacity(weights.len());
    let mut aggregated = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let ah = adjacency.matmul(hiddens.last().expect("non-empty"))?;
        let pre = ah.matmul(w)?;
        aggregated.push(ah);
        hiddens.push(if i < last { pre.relu() } else { pre.clone() });
        pre_activations.push(pre);
    }
    Ok(ForwardTrace {
        hiddens,
        pre_activations,
        aggregated,
    })
}

/// Loss and exact gradients of total_loss w.r.t. every weight matrix, for
/// one (adapted) training pair.
pub fn grad_total_loss(
    weights: &[Mat],
    adjacency: &Mat,
    x_source: &Mat,
    a_target: &Mat,
    x_target: &Mat,
    lambda: Real,
) -> Result<(Real, Vec<Mat>), G2gError> {
    if lambda < 0.0 {
        return Err(G2gError::BadLambda { lambda });
    }
    let trace = forward_trace(weights, adjacency, x_source)?;
    let z = trace.hiddens.last().expect("non-empty");
    let probabilities = z.matmul(&z.transpose())?.sigmoid();
    let loss = topology_loss(&probabilities, a_target)? + lambda * feature_loss(z, x_target)?;

    // Topology term: dL/dM for M = Z Z^T, using the fused BCE-sigmoid form
    // dL/dm = -S*a*(1-p) + (1-a)*p, zeroed where the clamp is active.
    let s = sparsity_weight(a_target);
    let n = z.rows();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let p = probabilities.get(i, j);
            if p <= PROB_CLAMP || p >= 1.0 - PROB_CLAMP {
                continue;
            }
            let a = a_target.get(i, j);
            g.set(i, j, -s * a * (1.0 - p) + (1.0 - a) * p);
        }
    }
    // dL_T/dZ = (G + G^T) Z.
    let mut dz = g.add(&g.transpose())?.matmul(z)?;

    // Feature term: d||z_f - x_f|| / dz_f = (z_f - x_f) / ||z_f - x_f||.
    if lambda > 0.0 {
        for r in 0..n {
            let diff: Vec<Real> = z
                .row(r)
                .iter()
                .zip(x_target.row(r))
                .map(|(&a, &b)| a - b)
                .collect();
            let norm = diff.iter().map(|d| d * d).sum::<Real>().sqrt();
            if norm > 0.0 {
                for (c, d) in diff.iter().enumerate() {
                    let v = dz.get(r, c) + lambda * d / norm;
                    dz.set(r, c, v);
                }
            }
        }
    }

    // Backward through the encoder layers.
    let adjacency_t = adjacency.transpose();
    let mut grads = vec![Mat::zeros(0, 0); weights.len()];
    let mut delta = dz; // dL/d hiddens[i+1]
    for i in (0..weights.len()).rev() {
        let dpre = if i < weights.len() - 1 {
            // ReLU derivative: pass where the pre-activation was positive.
            let mask = trace.pre_activations[i].map(|v| if v > 0.0 { 1.0 } else { 0.0 });
            delta.hadamard(&mask)?
        } else {
            delta.clone()
        };
        grads[i] = trace.aggregated[i].transpose().matmul(&dpre)?;
        if i > 0 {
            delta = adjacency_t.matmul(&dpre)?.matmul(&weights[i].transpose())?;
        }
    }
    Ok((loss, grads))
}
