//! Target-decode losses: sparsity-weighted topology cross-entropy plus
//! per-node feature norms.

use super::G2gError;
use crate::{Mat, Real};

/// Probabilities are clamped to this band before the logs.
pub const PROB_CLAMP: Real = 1e-12;

/// Sparsity weight S = (N^2 - |D|) / N^2, with |D| the number of ones in
/// the target adjacency. S is the fraction of absent arcs; it up-weights
/// the connected class in sparse graphs.
pub fn sparsity_weight(a_target: &Mat) -> Real {
    let n2 = (a_target.rows() * a_target.cols()) as Real;
    let ones: Real = a_target.values().iter().sum();
    (n2 - ones) / n2
}

/// Weighted binary cross-entropy between arc probabilities and the target
/// adjacency: sum of -S*a*log(p) - (1-a)*log(1-p).
pub fn topology_loss(p: &Mat, a_target: &Mat) -> Result<Real, G2gError> {
    if p.shape() != a_target.shape() {
        return Err(G2gError::LossShape {
            lhs: p.shape(),
            rhs: a_target.shape(),
        });
    }
    let s = sparsity_weight(a_target);
    let mut loss = 0.0;
    for (&prob, &a) in p.values().iter().zip(a_target.values()) {
        let prob = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss += -s * a * prob.ln() - (1.0 - a) * (1.0 - prob).ln();
    }
    Ok(loss)
}

/// Sum over nodes of the Euclidean distance between decoded and target
/// feature vectors (norms, not squared norms).
pub fn feature_loss(z: &Mat, x_target: &Mat) -> Result<Real, G2gError> {
    if z.shape() != x_target.shape() {
        return Err(G2gError::LossShape {
            lhs: z.shape(),
            rhs: x_target.shape(),
        });
    }
    let mut loss = 0.0;
    for r in 0..z.rows() {
        let sq: Real = z
            .row(r)
            .iter()
            .zip(x_target.row(r))
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        loss += sq.sqrt();
    }
    Ok(loss)
}

/// Combined target-decode loss: topology + lambda * features.
pub fn total_loss(
    p: &Mat,
    z: &Mat,
    a_target: &Mat,
    x_target: &Mat,
    lambda: Real,
) -> Result<Real, G2gError> {
    if lambda < 0.0 {
        return Err(G2gError::BadLambda { lambda });
    }
    Ok(topology_loss(p, a_target)? + lambda * feature_loss(z, x_target)?)
}
