//! System-wide simulation: the DTG itself, fixed-point propagation of
//! observed changes, structural-change handling with targeted retraining,
//! and the lazy-training model database.

mod db;
mod scenario;
mod system;

pub use db::{
    DbRecord, DtgDatabase, EntityTemplate, ManifestEntry, RecordKind, Signature, TemplateWithData,
    FORMAT_VERSION,
};
pub use scenario::{
    apply_structural_change, obtain_arc_model, run_scenario, ChangeReport, ObservedFeature,
    ScenarioContext, ScenarioEvent, ScenarioOutcome, TrainBudget,
};
pub use system::{
    converged, relative_change, ArcModel, EntityState, SimulationTrace, SystemGraph, TraceRow,
};

use thiserror::Error;

use crate::entity_graph::EntityGraphError;
use crate::g2g::G2gError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("entity {entity} is not part of the system")]
    DanglingEntity { entity: String },
    #[error("entity {entity} already exists")]
    DuplicateEntity { entity: String },
    #[error("self-arcs are not allowed (entity {entity})")]
    SelfArc { entity: String },
    #[error("arc {source_id}->{target_id}: model types do not match the endpoints")]
    ArcTypeMismatch {
        source_id: String,
        target_id: String,
    },
    #[error("arc {source_id}->{target_id}: model order {order} / window {window} do not fit the endpoints")]
    ArcShapeMismatch {
        source_id: String,
        target_id: String,
        order: usize,
        window: usize,
    },
    #[error("entity {entity}: expected {expected} regressors, got {got}")]
    RegressorCount {
        entity: String,
        expected: usize,
        got: usize,
    },
    #[error("epsilon must be positive, got {epsilon}")]
    BadEpsilon { epsilon: f64 },
    #[error("observation for {entity}: expected {}x{}, got {}x{}", expected.0, expected.1, got.0, got.1)]
    ObservationShape {
        entity: String,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("entity {entity} has no feature {feature}")]
    UnknownFeature { entity: String, feature: String },
    #[error("arc {source_id}->{target_id} does not exist")]
    UnknownArc {
        source_id: String,
        target_id: String,
    },
    #[error(
        "arc {source_id}->{target_id}: only {available} aligned samples, need at least {window}"
    )]
    InsufficientTrainingData {
        source_id: String,
        target_id: String,
        available: usize,
        window: usize,
    },
    #[error("training budget of {cap} runs exhausted")]
    TrainBudgetExhausted { cap: usize },
    #[error("entity {entity}: history of {len} samples cannot fill a window of {window}")]
    EntityHistoryTooShort {
        entity: String,
        len: usize,
        window: usize,
    },
    #[error("observe events are not structural changes")]
    NotStructural,
    #[error("entity {entity}: fusion generator failed: {message}")]
    Fusion { entity: String, message: String },
    #[error("record {signature}: checksum mismatch in {file}")]
    ChecksumMismatch { signature: String, file: String },
    #[error("record {signature} is corrupt: {reason}")]
    CorruptRecord { signature: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    EntityGraph(#[from] EntityGraphError),
    #[error(transparent)]
    G2g(#[from] G2gError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
