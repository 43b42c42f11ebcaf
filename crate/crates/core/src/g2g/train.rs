//! Full-batch training loop for G2G models.

use serde::{Deserialize, Serialize};

use super::adapt::AdaptationRecord;
use super::grad::grad_total_loss;
use super::loss::{feature_loss, topology_loss};
use super::model::{check_threshold, encode_with, G2GModel};
use super::G2gError;
use crate::numerics::{xavier_uniform, OptimizerState, SeededRng};
use crate::{Mat, Real};

/// Hyperparameters for one G2G training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Loss mix: total = topology + lambda * features.
    pub lambda: Real,
    pub learning_rate: Real,
    pub momentum: Real,
    pub epochs: usize,
    /// Adjacency / decode threshold.
    pub delta: Real,
    /// Hidden layer widths; empty means a single linear layer.
    pub hidden_dims: Vec<usize>,
    /// Global L2 gradient-norm cap; None disables clipping. Keeps momentum
    /// steps from blowing the ReLU layers into a dead region.
    pub grad_clip: Option<Real>,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for a given window length: one hidden layer of that width.
    pub fn new(window: usize) -> Self {
        Self {
            lambda: 1.0,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 1000,
            delta: 0.3,
            hidden_dims: vec![window],
            grad_clip: Some(10.0),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), G2gError> {
        check_threshold(self.delta)?;
        if self.lambda < 0.0 {
            return Err(G2gError::BadLambda {
                lambda: self.lambda,
            });
        }
        if self.learning_rate <= 0.0 || !(0.0..1.0).contains(&self.momentum) {
            return Err(G2gError::BadOptimizer {
                learning_rate: self.learning_rate,
                momentum: self.momentum,
            });
        }
        if matches!(self.grad_clip, Some(c) if c <= 0.0) {
            return Err(G2gError::BadOptimizer {
                learning_rate: self.learning_rate,
                momentum: self.momentum,
            });
        }
        Ok(())
    }
}

/// One adapted training pair. All pairs of a run share the same source
/// adjacency (it is frozen into the model).
#[derive(Debug, Clone)]
pub struct TrainPair {
    pub x_source: Mat,
    pub a_source: Mat,
    pub x_target: Mat,
    pub a_target: Mat,
}

/// Identity of the arc being trained.
#[derive(Debug, Clone)]
pub struct ModelMeta {
    pub source_type: String,
    pub target_type: String,
    pub adaptation: AdaptationRecord,
}

/// Per-epoch loss record. `smoothed_loss` is the running minimum, a
/// monotone view of training progress.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingReport {
    pub loss_history: Vec<Real>,
    pub smoothed_loss: Vec<Real>,
    pub initial_loss: Real,
    pub final_loss: Real,
}

/// Overlapping column windows of a feature matrix:
/// floor((len - window)/stride) + 1 slices of shape (rows, window).
pub fn slice_windows(m: &Mat, window: usize, stride: usize) -> Result<Vec<Mat>, G2gError> {
    if stride == 0 || window == 0 || window > m.cols() {
        return Err(G2gError::BadWindowing {
            window,
            stride,
            len: m.cols(),
        });
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + window <= m.cols() {
        let rows: Vec<Vec<Real>> = (0..m.rows())
            .map(|r| m.row(r)[start..start + window].to_vec())
            .collect();
        out.push(Mat::from_rows(&rows)?);
        start += stride;
    }
    Ok(out)
}

fn mean_loss(weights: &[Mat], pairs: &[TrainPair], lambda: Real) -> Result<Real, G2gError> {
    let mut total = 0.0;
    for pair in pairs {
        let z = encode_with(weights, &pair.a_source, &pair.x_source)?;
        let p = z.matmul(&z.transpose())?.sigmoid();
        total += topology_loss(&p, &pair.a_target)? + lambda * feature_loss(&z, &pair.x_target)?;
    }
    Ok(total / pairs.len() as Real)
}

/// Trains a G2G model by full-batch momentum SGD on the combined loss.
/// Deterministic given the seed.
pub fn train_g2g(
    meta: ModelMeta,
    pairs: &[TrainPair],
    config: &TrainConfig,
) -> Result<(G2GModel, TrainingReport), G2gError> {
    config.validate()?;
    let first = pairs.first().ok_or(G2gError::EmptyTrainingSet)?;
    let n = first.x_source.rows();
    let t = first.x_source.cols();
    for pair in pairs {
        let ok = pair.x_source.shape() == (n, t)
            && pair.x_target.shape() == (n, t)
            && pair.a_source.shape() == (n, n)
            && pair.a_target.shape() == (n, n);
        if !ok {
            return Err(G2gError::PairShapeMismatch {
                expected: (n, t),
                x_source: pair.x_source.shape(),
                x_target: pair.x_target.shape(),
            });
        }
        if pair.a_source != first.a_source {
            return Err(G2gError::InconsistentSourceAdjacency);
        }
    }

    // Layer dims [T, hidden.., T]: F = T so decoded features compare
    // one-to-one against the target window.
    let mut layer_dims = Vec::with_capacity(config.hidden_dims.len() + 2);
    layer_dims.push(t);
    layer_dims.extend_from_slice(&config.hidden_dims);
    layer_dims.push(t);

    let mut rng = SeededRng::new(config.seed);
    let mut weights: Vec<Mat> = layer_dims
        .windows(2)
        .map(|w| xavier_uniform(&mut rng, w[0], w[1]))
        .collect();

    let mut optimizer = OptimizerState::new(config.learning_rate, config.momentum);
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut grad_acc: Vec<Mat> = weights
            .iter()
            .map(|w| Mat::zeros(w.rows(), w.cols()))
            .collect();
        let mut epoch_loss = 0.0;
        for pair in pairs {
            let (loss, grads) = grad_total_loss(
                &weights,
                &pair.a_source,
                &pair.x_source,
                &pair.a_target,
                &pair.x_target,
                config.lambda,
            )?;
            epoch_loss += loss;
            for (acc, g) in grad_acc.iter_mut().zip(&grads) {
                *acc = acc.add(g)?;
            }
        }
        let inv = 1.0 / pairs.len() as Real;
        for g in &mut grad_acc {
            *g = g.scale(inv);
        }
        if let Some(cap) = config.grad_clip {
            let norm = grad_acc
                .iter()
                .map(|g| {
                    let f = g.frobenius_norm();
                    f * f
                })
                .sum::<Real>()
                .sqrt();
            if norm > cap {
                let shrink = cap / norm;
                for g in &mut grad_acc {
                    *g = g.scale(shrink);
                }
            }
        }
        optimizer.step(&mut weights, &grad_acc)?;
        loss_history.push(epoch_loss * inv);
    }

    let final_loss = mean_loss(&weights, pairs, config.lambda)?;
    let initial_loss = loss_history.first().copied().unwrap_or(final_loss);
    let mut smoothed_loss = Vec::with_capacity(loss_history.len());
    let mut best = Real::INFINITY;
    for &l in &loss_history {
        best = best.min(l);
        smoothed_loss.push(best);
    }

    let model = G2GModel {
        source_type: meta.source_type,
        target_type: meta.target_type,
        layer_dims,
        weights,
        delta: config.delta,
        adjacency: first.a_source.clone(),
        adaptation: meta.adaptation,
    };
    Ok((
        model,
        TrainingReport {
            loss_history,
            smoothed_loss,
            initial_loss,
            final_loss,
        },
    ))
}
