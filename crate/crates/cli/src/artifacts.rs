//! On-disk artifacts shared between pipeline stages: the topology file,
//! per-entity reports, the system manifest, and JSON write helpers.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use dtg_core::entity_graph::{CorrelationMethod, EntityGraph, FeatureRegressor};
use dtg_core::gaen::GaenBundle;
use dtg_core::{Mat, Real};

use crate::error::CliError;
use crate::ingest::GapReport;

/// User-declared system connectivity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub entities: Vec<TopologyEntity>,
    #[serde(default)]
    pub arcs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyEntity {
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    /// CSV path, relative to the configured data dir.
    pub data: PathBuf,
}

impl TopologyFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let topology: TopologyFile = read_json(path)?;
        topology.validate()?;
        Ok(topology)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut ids = BTreeSet::new();
        for entity in &self.entities {
            if !ids.insert(entity.id.as_str()) {
                return Err(CliError::Topology(format!(
                    "duplicate entity id {}",
                    entity.id
                )));
            }
        }
        for (source, target) in &self.arcs {
            if source == target {
                return Err(CliError::Topology(format!("self-arc on {source}")));
            }
            for end in [source, target] {
                if !ids.contains(end.as_str()) {
                    return Err(CliError::Topology(format!(
                        "arc references undeclared entity {end}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything `build-entity` learned about one entity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityReport {
    pub entity_id: String,
    pub entity_type: String,
    pub correlation_method: CorrelationMethod,
    /// Mean confidence per candidate method.
    pub confidence: ConfidenceTable,
    pub arc_weights: Mat,
    /// Binary adjacency at the configured delta.
    pub adjacency: Mat,
    pub features: Vec<ReportFeature>,
    pub regressors: Vec<FeatureRegressor>,
    pub gap_report: GapReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceTable {
    pub pearson: Real,
    pub spearman: Real,
    pub kendall: Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFeature {
    pub id: String,
    pub unit: String,
    pub values: Vec<Real>,
}

impl EntityReport {
    pub fn graph(&self) -> Result<EntityGraph, CliError> {
        let nodes = self
            .features
            .iter()
            .map(|f| {
                dtg_core::entity_graph::FeatureSeries::new(f.id.clone(), f.values.clone())
                    .map(|s| s.with_unit(f.unit.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EntityGraph {
            entity_id: self.entity_id.clone(),
            entity_type: self.entity_type.clone(),
            nodes,
            arc_weights: self.arc_weights.clone(),
            correlation_method: self.correlation_method,
        })
    }
}

/// Output of `train-g2g`: what the system is made of and where its pieces
/// live.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemManifest {
    pub window: usize,
    pub delta: Real,
    pub lambda: Real,
    pub entities: Vec<ManifestEntity>,
    pub arcs: Vec<ManifestArc>,
    /// Database directory, relative to the manifest's own directory.
    pub db_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntity {
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    /// Entity report path, relative to the manifest's directory.
    pub report: PathBuf,
    /// Fusion bundle path, if `fuse` produced one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestArc {
    pub source: String,
    pub target: String,
    pub signature: String,
}

impl SystemManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }
}

/// Serialized fusion result for one entity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionReportFile {
    pub bundle: GaenBundle,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Deterministic pretty-printed JSON write (creates parent dirs).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::File {
            path: parent.display().to_string(),
            message: e.to_string(),
        })?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable artifact");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// File-system-safe name for an entity id.
pub fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
