//! Trust-weighted ensemble over the entity's own regressors and any
//! registered external DKMs.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::protocol::DkmClient;
use super::GaenError;
use crate::entity_graph::FeatureRegressor;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    InternalRegressors,
    ExternalDkm,
}

/// Declared-parameter fallback for DKMs that do not report a count: the
/// dense-linear equivalent of their interface, dim * (dim + 1).
fn default_dkm_params(dim: usize) -> u64 {
    (dim * (dim + 1)) as u64
}

enum Backend {
    Internal(Vec<FeatureRegressor>),
    Dkm(DkmClient),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Internal(r) => write!(f, "Internal({} regressors)", r.len()),
            Backend::Dkm(c) => write!(f, "Dkm({})", c.command()),
        }
    }
}

/// One ensemble member: either the entity's own per-feature regressors or
/// an external DKM process.
#[derive(Debug)]
pub struct PredictorHandle {
    pub kind: PredictorKind,
    pub identifier: String,
    pub trust_weight: Real,
    /// Input/output dimension; equals the entity's feature count.
    pub dim: usize,
    /// Effective parameter count, by direct count (internal) or declaration
    /// (external).
    pub param_count: u64,
    backend: Backend,
}

/// Serializable face of a member, for fusion reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberDescriptor {
    pub kind: PredictorKind,
    pub identifier: String,
    pub trust_weight: Real,
    pub dim: usize,
    pub param_count: u64,
}

impl PredictorHandle {
    /// Wraps the entity's per-feature regressors as an ensemble member.
    /// The member maps a full feature-value vector to the vector of each
    /// regressor's prediction from its neighbors.
    pub fn internal(
        regressors: Vec<FeatureRegressor>,
        trust_weight: Real,
    ) -> Result<Self, GaenError> {
        if trust_weight <= 0.0 {
            return Err(GaenError::BadTrustWeight { trust_weight });
        }
        let dim = regressors.len();
        let param_count = regressors
            .iter()
            .map(|r| r.coefficients.len() as u64 + 1)
            .sum();
        Ok(Self {
            kind: PredictorKind::InternalRegressors,
            identifier: "internal-regressors".to_string(),
            trust_weight,
            dim,
            param_count,
            backend: Backend::Internal(regressors),
        })
    }

    pub fn descriptor(&self) -> MemberDescriptor {
        MemberDescriptor {
            kind: self.kind,
            identifier: self.identifier.clone(),
            trust_weight: self.trust_weight,
            dim: self.dim,
            param_count: self.param_count,
        }
    }

    pub fn predict(&mut self, input: &[Real]) -> Result<Vec<Real>, GaenError> {
        if input.len() != self.dim {
            return Err(GaenError::DimMismatch {
                member: self.identifier.clone(),
                expected: self.dim,
                got: input.len(),
            });
        }
        let outputs = match &mut self.backend {
            Backend::Internal(regressors) => regressors
                .iter()
                .map(|r| {
                    let vals: Vec<Real> = r.neighbors.iter().map(|&j| input[j]).collect();
                    r.predict(&vals)
                })
                .collect::<Result<Vec<Real>, _>>()
                .map_err(|e| GaenError::MemberFailure {
                    member: self.identifier.clone(),
                    message: e.to_string(),
                })?,
            Backend::Dkm(client) => {
                client
                    .predict(input)
                    .map_err(|e| GaenError::MemberFailure {
                        member: self.identifier.clone(),
                        message: e.to_string(),
                    })?
            }
        };
        if outputs.len() != self.dim {
            return Err(GaenError::DimMismatch {
                member: self.identifier.clone(),
                expected: self.dim,
                got: outputs.len(),
            });
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(GaenError::MemberFailure {
                member: self.identifier.clone(),
                message: "non-finite output".to_string(),
            });
        }
        Ok(outputs)
    }
}

/// Launches and validates an external DKM: the probe must round-trip and
/// declare the expected dimension.
pub fn register_dkm(
    command: &str,
    trust_weight: Real,
    expected_dim: usize,
    timeout: Duration,
) -> Result<PredictorHandle, GaenError> {
    if trust_weight <= 0.0 {
        return Err(GaenError::BadTrustWeight { trust_weight });
    }
    let mut client = DkmClient::launch(command, timeout)?;
    let (dim, params) = client.probe()?;
    if dim != expected_dim {
        return Err(GaenError::DimMismatch {
            member: command.to_string(),
            expected: expected_dim,
            got: dim,
        });
    }
    Ok(PredictorHandle {
        kind: PredictorKind::ExternalDkm,
        identifier: command.to_string(),
        trust_weight,
        dim,
        param_count: params.unwrap_or_else(|| default_dkm_params(dim)),
        backend: Backend::Dkm(client),
    })
}

/// Trust-weighted mixture of predictors.
#[derive(Debug)]
pub struct EnsembleModel {
    members: Vec<PredictorHandle>,
    dim: usize,
}

impl EnsembleModel {
    pub fn new(members: Vec<PredictorHandle>) -> Result<Self, GaenError> {
        let first = members.first().ok_or(GaenError::EmptyEnsemble)?;
        let dim = first.dim;
        if members.iter().any(|m| m.dim != dim) {
            return Err(GaenError::InconsistentMembers);
        }
        Ok(Self { members, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[PredictorHandle] {
        &self.members
    }

    pub fn descriptors(&self) -> Vec<MemberDescriptor> {
        self.members.iter().map(|m| m.descriptor()).collect()
    }

    /// Trust weights normalized to sum 1, in member order.
    pub fn normalized_weights(&self) -> Vec<Real> {
        let total: Real = self.members.iter().map(|m| m.trust_weight).sum();
        self.members
            .iter()
            .map(|m| m.trust_weight / total)
            .collect()
    }

    /// Sum of member effective parameter counts.
    pub fn effective_param_count(&self) -> u64 {
        self.members.iter().map(|m| m.param_count).sum()
    }

    /// Trust-weighted average of member outputs. Any member failure is an
    /// error naming the member; there is no silent dropout.
    pub fn predict(&mut self, input: &[Real]) -> Result<Vec<Real>, GaenError> {
        if input.len() != self.dim {
            return Err(GaenError::DimMismatch {
                member: "ensemble".to_string(),
                expected: self.dim,
                got: input.len(),
            });
        }
        let weights = self.normalized_weights();
        let mut acc = vec![0.0; self.dim];
        for (member, w) in self.members.iter_mut().zip(weights) {
            let out = member.predict(input)?;
            for (a, v) in acc.iter_mut().zip(out) {
                *a += w * v;
            }
        }
        Ok(acc)
    }
}
