//! Per-feature ridge regressors over each feature's correlated neighbors.
//!
//! During simulation these reconcile a feature's latest value from its
//! neighbors after a graph-to-graph update lands.

use serde::{Deserialize, Serialize};

use super::{EntityGraph, EntityGraphError};
use crate::numerics::solve;
use crate::{Mat, Real};

/// Linear model for one feature over its thresholded neighbor set.
/// An empty neighbor set means a constant model (historical mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRegressor {
    pub target: usize,
    pub neighbors: Vec<usize>,
    pub coefficients: Vec<Real>,
    pub intercept: Real,
    pub ridge: Real,
}

impl FeatureRegressor {
    pub fn is_constant(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Linear prediction from neighbor values (in `self.neighbors` order).
    pub fn predict(&self, neighbor_values: &[Real]) -> Result<Real, EntityGraphError> {
        if neighbor_values.len() != self.neighbors.len() {
            return Err(EntityGraphError::NeighborCountMismatch {
                expected: self.neighbors.len(),
                got: neighbor_values.len(),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(neighbor_values)
            .map(|(c, v)| c * v)
            .sum::<Real>()
            + self.intercept)
    }
}

/// Fits one ridge least-squares model per feature over its |E_ij| > delta
/// neighbors. `history` has one row per time step, columns in node order.
pub fn fit_regressors(
    graph: &EntityGraph,
    history: &Mat,
    delta: Real,
    ridge: Real,
) -> Result<Vec<FeatureRegressor>, EntityGraphError> {
    let n_features = graph.feature_count();
    if history.cols() != n_features {
        return Err(EntityGraphError::HistoryShape {
            cols: history.cols(),
            features: n_features,
        });
    }
    let t_len = history.rows();
    let mut models = Vec::with_capacity(n_features);
    for target in 0..n_features {
        let neighbors = graph.neighbors(target, delta);
        if neighbors.is_empty() {
            let mean = (0..t_len).map(|r| history.get(r, target)).sum::<Real>() / t_len as Real;
            models.push(FeatureRegressor {
                target,
                neighbors,
                coefficients: Vec::new(),
                intercept: mean,
                ridge,
            });
            continue;
        }
        // Normal equations on the augmented design [X 1]; the ridge penalty
        // applies to coefficients only, not the intercept.
        let k = neighbors.len();
        let mut design = Mat::zeros(t_len, k + 1);
        for r in 0..t_len {
            for (c, &j) in neighbors.iter().enumerate() {
                design.set(r, c, history.get(r, j));
            }
            design.set(r, k, 1.0);
        }
        let gram_base = design.transpose().matmul(&design)?;
        let mut gram = gram_base;
        for c in 0..k {
            let v = gram.get(c, c) + ridge;
            gram.set(c, c, v);
        }
        let mut rhs = vec![0.0; k + 1];
        for r in 0..t_len {
            let y = history.get(r, target);
            for c in 0..=k {
                rhs[c] += design.get(r, c) * y;
            }
        }
        let beta = solve(&gram, &rhs)?;
        models.push(FeatureRegressor {
            target,
            neighbors,
            coefficients: beta[..k].to_vec(),
            intercept: beta[k],
            ridge,
        });
    }
    Ok(models)
}
