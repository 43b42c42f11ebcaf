//! Graph adaptation: bringing a source entity graph to the target's order.
//!
//! A G2G model needs source and target graphs of equal order. A smaller
//! source is padded with pseudo features; a larger source has its features
//! merged into hyper features by k-means. The target is the calibration
//! benchmark and is never modified.

use serde::{Deserialize, Serialize};

use super::G2gError;
use crate::entity_graph::EntityGraph;
use crate::numerics::kmeans;
use crate::{Mat, Real};

/// How a source graph was adapted, and how to re-apply that adaptation to
/// fresh source feature matrices at inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AdaptationRecord {
    None,
    Padded {
        /// Indices of the appended pseudo features.
        pseudo_indices: Vec<usize>,
    },
    Clustered {
        /// Cluster id per original source feature, relabeled by first
        /// appearance so the hyper-feature order is stable.
        assignments: Vec<usize>,
        /// Training-time centroids, one row per hyper feature.
        centroids: Mat,
    },
}

impl AdaptationRecord {
    /// Number of rows the adapted feature matrix has, given the raw count.
    pub fn adapted_rows(&self, raw_rows: usize) -> usize {
        match self {
            AdaptationRecord::None => raw_rows,
            AdaptationRecord::Padded { pseudo_indices } => raw_rows + pseudo_indices.len(),
            AdaptationRecord::Clustered { centroids, .. } => centroids.rows(),
        }
    }

    /// Re-applies the adaptation to a fresh raw source feature matrix:
    /// pad zero rows, or replace member rows by their cluster mean.
    pub fn apply_to(&self, raw: &Mat) -> Result<Mat, G2gError> {
        match self {
            AdaptationRecord::None => Ok(raw.clone()),
            AdaptationRecord::Padded { pseudo_indices } => {
                let mut rows: Vec<Vec<Real>> =
                    (0..raw.rows()).map(|r| raw.row(r).to_vec()).collect();
                for _ in pseudo_indices {
                    rows.push(vec![0.0; raw.cols()]);
                }
                Ok(Mat::from_rows(&rows)?)
            }
            AdaptationRecord::Clustered {
                assignments,
                centroids,
            } => {
                if assignments.len() != raw.rows() {
                    return Err(G2gError::AdaptationShape {
                        expected: assignments.len(),
                        got: raw.rows(),
                    });
                }
                let k = centroids.rows();
                let mut sums = Mat::zeros(k, raw.cols());
                let mut counts = vec![0usize; k];
                for (i, &c) in assignments.iter().enumerate() {
                    counts[c] += 1;
                    for j in 0..raw.cols() {
                        let v = sums.get(c, j) + raw.get(i, j);
                        sums.set(c, j, v);
                    }
                }
                let mut out = Mat::zeros(k, raw.cols());
                for c in 0..k {
                    // Clusters are non-empty by construction.
                    let inv = 1.0 / counts[c] as Real;
                    for j in 0..raw.cols() {
                        out.set(c, j, sums.get(c, j) * inv);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A source graph brought to the target order. `weights` is the adapted
/// arc-weight matrix; for padded graphs it is intentionally asymmetric
/// (pseudo rows aggregate from real features, never the reverse).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptedGraph {
    pub entity_type: String,
    /// Adapted feature vectors, one row per (possibly hyper/pseudo) feature.
    pub features: Mat,
    /// Adapted arc-weight matrix, unit diagonal.
    pub weights: Mat,
    pub record: AdaptationRecord,
}

/// Adapts `source` to `target`'s order. The target graph is never changed.
pub fn adapt_pair(
    source: &EntityGraph,
    target: &EntityGraph,
    seed: u64,
) -> Result<AdaptedGraph, G2gError> {
    let n_s = source.feature_count();
    let n_t = target.feature_count();
    let features = source.feature_matrix();
    if n_s == n_t {
        return Ok(AdaptedGraph {
            entity_type: source.entity_type.clone(),
            features,
            weights: source.arc_weights.clone(),
            record: AdaptationRecord::None,
        });
    }
    if n_s < n_t {
        let pseudo_indices: Vec<usize> = (n_s..n_t).collect();
        let record = AdaptationRecord::Padded {
            pseudo_indices: pseudo_indices.clone(),
        };
        let padded_features = record.apply_to(&features)?;
        // Row i of the weight matrix lists what node i aggregates from:
        // pseudo rows take weight-1 arcs from every real feature, real rows
        // never reference pseudo columns, pseudo-pseudo stays disconnected.
        let mut weights = Mat::zeros(n_t, n_t);
        for i in 0..n_s {
            for j in 0..n_s {
                weights.set(i, j, source.arc_weights.get(i, j));
            }
        }
        for &p in &pseudo_indices {
            for j in 0..n_s {
                weights.set(p, j, 1.0);
            }
            weights.set(p, p, 1.0);
        }
        return Ok(AdaptedGraph {
            entity_type: source.entity_type.clone(),
            features: padded_features,
            weights,
            record,
        });
    }

    // n_s > n_t: merge strongly correlated features into hyper features.
    let outcome = kmeans(&features, n_t, seed)?;
    let assignments = relabel_by_first_appearance(&outcome.assignments, n_t);
    let mut centroid_rows = vec![vec![0.0; features.cols()]; n_t];
    let mut counts = vec![0usize; n_t];
    for (i, &c) in assignments.iter().enumerate() {
        counts[c] += 1;
        for j in 0..features.cols() {
            centroid_rows[c][j] += features.get(i, j);
        }
    }
    for c in 0..n_t {
        for v in &mut centroid_rows[c] {
            *v /= counts[c] as Real;
        }
    }
    let centroids = Mat::from_rows(&centroid_rows)?;

    // Hyper-arc weight: mean |E| over member pairs, signed by the mean E,
    // clipped to [-1, 1]. Unit diagonal.
    let mut weights = Mat::identity(n_t);
    for a in 0..n_t {
        for b in 0..n_t {
            if a == b {
                continue;
            }
            let mut abs_sum = 0.0;
            let mut raw_sum = 0.0;
            let mut n_pairs = 0usize;
            for i in 0..n_s {
                if assignments[i] != a {
                    continue;
                }
                for j in 0..n_s {
                    if assignments[j] != b {
                        continue;
                    }
                    abs_sum += source.arc_weights.get(i, j).abs();
                    raw_sum += source.arc_weights.get(i, j);
                    n_pairs += 1;
                }
            }
            let magnitude = (abs_sum / n_pairs as Real).clamp(-1.0, 1.0);
            let signed = if raw_sum < 0.0 { -magnitude } else { magnitude };
            weights.set(a, b, signed);
        }
    }

    Ok(AdaptedGraph {
        entity_type: source.entity_type.clone(),
        features: centroids.clone(),
        weights,
        record: AdaptationRecord::Clustered {
            assignments,
            centroids,
        },
    })
}

/// Relabels cluster ids in order of first appearance, so hyper-feature
/// order does not depend on k-means internals.
fn relabel_by_first_appearance(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut mapping = vec![usize::MAX; k];
    let mut next = 0;
    let mut out = Vec::with_capacity(assignments.len());
    for &a in assignments {
        if mapping[a] == usize::MAX {
            mapping[a] = next;
            next += 1;
        }
        out.push(mapping[a]);
    }
    out
}
