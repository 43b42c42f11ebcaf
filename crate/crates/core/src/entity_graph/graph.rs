//! Entity graphs: sensor features as nodes, correlation coefficients as
//! arc weights.

use serde::{Deserialize, Serialize};

use super::correlation::{select_method, CorrelationMethod, CorrelationReport};
use super::EntityGraphError;
use crate::{Mat, Real};

/// One sensor modality's sampled values for one entity. Uniform sampling is
/// assumed; gaps are already filled at ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub feature_id: String,
    pub values: Vec<Real>,
    /// Opaque unit label, carried through for reports.
    #[serde(default)]
    pub unit: String,
}

impl FeatureSeries {
    pub fn new(feature_id: impl Into<String>, values: Vec<Real>) -> Result<Self, EntityGraphError> {
        let s = Self {
            feature_id: feature_id.into(),
            values,
            unit: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn validate(&self) -> Result<(), EntityGraphError> {
        if self.values.len() < 4 {
            return Err(EntityGraphError::SeriesTooShort {
                len: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(EntityGraphError::NonFiniteValue {
                feature: self.feature_id.clone(),
            });
        }
        Ok(())
    }
}

/// Per-entity correlation graph. Node order is stable and defines the
/// row/column order of `arc_weights`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityGraph {
    pub entity_id: String,
    /// Type signature; entities of the same type are interchangeable for
    /// model reuse.
    pub entity_type: String,
    pub nodes: Vec<FeatureSeries>,
    /// Symmetric, unit-diagonal coefficient matrix with entries in [-1, 1].
    pub arc_weights: Mat,
    pub correlation_method: CorrelationMethod,
}

impl EntityGraph {
    pub fn feature_count(&self) -> usize {
        self.nodes.len()
    }

    /// Length of each node's feature vector.
    pub fn series_len(&self) -> usize {
        self.nodes.first().map(|n| n.values.len()).unwrap_or(0)
    }

    pub fn node_index(&self, feature_id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.feature_id == feature_id)
    }

    /// Feature matrix with one row per node (N_f x len).
    pub fn feature_matrix(&self) -> Mat {
        Mat::from_rows(
            &self
                .nodes
                .iter()
                .map(|n| n.values.clone())
                .collect::<Vec<_>>(),
        )
        .expect("validated node vectors")
    }

    /// Trailing window of each node's vector, as an N_f x window matrix.
    pub fn trailing_window(&self, window: usize) -> Result<Mat, EntityGraphError> {
        let len = self.series_len();
        if window == 0 || window > len {
            return Err(EntityGraphError::WindowTooLong { window, len });
        }
        Mat::from_rows(
            &self
                .nodes
                .iter()
                .map(|n| n.values[len - window..].to_vec())
                .collect::<Vec<_>>(),
        )
        .map_err(EntityGraphError::from)
    }

    /// Neighbor indices of feature `i` under threshold `delta`.
    pub fn neighbors(&self, i: usize, delta: Real) -> Vec<usize> {
        (0..self.feature_count())
            .filter(|&j| j != i && self.arc_weights.get(i, j).abs() > delta)
            .collect()
    }
}

/// What gets built per entity: the graph plus the full correlation report
/// that justified the method choice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityGraphBuild {
    pub graph: EntityGraph,
    pub report: CorrelationReport,
}

/// Options for graph construction.
#[derive(Debug, Clone)]
pub struct GraphBuildConfig {
    /// Candidate methods, tried in tie-break priority order.
    pub candidate_methods: Vec<CorrelationMethod>,
}

impl Default for GraphBuildConfig {
    fn default() -> Self {
        Self {
            candidate_methods: CorrelationMethod::ALL.to_vec(),
        }
    }
}

/// Builds an entity graph from raw feature series: selects the correlation
/// method by mean significance-test confidence, then fills the arc-weight
/// matrix with that method's coefficients (unit diagonal forced).
pub fn build_entity_graph(
    entity_id: impl Into<String>,
    entity_type: impl Into<String>,
    series: Vec<FeatureSeries>,
    config: &GraphBuildConfig,
) -> Result<EntityGraphBuild, EntityGraphError> {
    if series.len() < 2 {
        return Err(EntityGraphError::TooFewFeatures {
            count: series.len(),
        });
    }
    let len = series[0].values.len();
    for s in &series {
        s.validate()?;
        if s.values.len() != len {
            return Err(EntityGraphError::LengthMismatch {
                left: len,
                right: s.values.len(),
            });
        }
    }
    for (i, s) in series.iter().enumerate() {
        if series[..i].iter().any(|o| o.feature_id == s.feature_id) {
            return Err(EntityGraphError::DuplicateFeature {
                feature: s.feature_id.clone(),
            });
        }
    }

    let (mut method, report) = select_method(&series)?;
    if !config.candidate_methods.contains(&method) {
        // Restricted candidate set: best allowed method, same tie-break order.
        let mut best: Option<CorrelationMethod> = None;
        for m in CorrelationMethod::ALL {
            if !config.candidate_methods.contains(&m) {
                continue;
            }
            match best {
                None => best = Some(m),
                Some(b) if report.method(m).mean_confidence > report.method(b).mean_confidence => {
                    best = Some(m)
                }
                _ => {}
            }
        }
        method = best.ok_or(EntityGraphError::NoCandidateMethods)?;
    }

    let mut arc_weights = report.method(method).coefficients.clone();
    for i in 0..series.len() {
        arc_weights.set(i, i, 1.0);
    }
    Ok(EntityGraphBuild {
        graph: EntityGraph {
            entity_id: entity_id.into(),
            entity_type: entity_type.into(),
            nodes: series,
            arc_weights,
            correlation_method: method,
        },
        report,
    })
}
