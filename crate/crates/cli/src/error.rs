//! Command-level errors, rendered as a single machine-readable JSON line.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    EntityGraph(#[from] dtg_core::entity_graph::EntityGraphError),
    #[error(transparent)]
    G2g(#[from] dtg_core::g2g::G2gError),
    #[error(transparent)]
    Gaen(#[from] dtg_core::gaen::GaenError),
    #[error(transparent)]
    Simulation(#[from] dtg_core::simulation::SimulationError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Ingest { .. } => "ingest",
            CliError::File { .. } => "file",
            CliError::Config(_) => "config",
            CliError::Topology(_) => "topology",
            CliError::Invalid(_) => "invalid",
            CliError::EntityGraph(_) => "entity-graph",
            CliError::G2g(_) => "g2g",
            CliError::Gaen(_) => "gaen",
            CliError::Simulation(_) => "simulation",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: ErrorBody<'a>,
}

/// The single-line JSON emitted on failure.
pub fn error_json(err: &CliError) -> String {
    serde_json::to_string(&ErrorLine {
        error: ErrorBody {
            kind: err.kind(),
            message: err.to_string(),
        },
    })
    .expect("serializable error")
}
