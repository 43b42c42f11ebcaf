//! Per-entity graphs built from sensor time series: correlation-method
//! selection via significance testing, arc weights, and per-feature
//! regression models.

mod correlation;
mod graph;
mod regressor;

pub use correlation::{
    correlation, select_method, significance, CorrelationMethod, CorrelationReport, MethodReport,
};
pub use graph::{
    build_entity_graph, EntityGraph, EntityGraphBuild, FeatureSeries, GraphBuildConfig,
};
pub use regressor::{fit_regressors, FeatureRegressor};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, PartialEq)]
pub enum EntityGraphError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series of length {len} is too short (need >= 4 samples)")]
    SeriesTooShort { len: usize },
    #[error("constant input: correlation coefficient is undefined")]
    DegenerateInput,
    #[error("an entity graph needs at least 2 features, got {count}")]
    TooFewFeatures { count: usize },
    #[error("feature {feature} contains a non-finite value")]
    NonFiniteValue { feature: String },
    #[error("duplicate feature id {feature}")]
    DuplicateFeature { feature: String },
    #[error("no candidate correlation methods configured")]
    NoCandidateMethods,
    #[error("window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("regressor expects {expected} neighbor values, got {got}")]
    NeighborCountMismatch { expected: usize, got: usize },
    #[error("history has {cols} columns but the graph has {features} features")]
    HistoryShape { cols: usize, features: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
