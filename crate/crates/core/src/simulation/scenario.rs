//! Scenario events: observations and structural changes, with lazy
//! (database-first) retraining of affected arcs only.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::db::{DtgDatabase, Signature};
use super::system::{ArcModel, SimulationTrace, SystemGraph};
use super::SimulationError;
use crate::entity_graph::{build_entity_graph, fit_regressors, FeatureSeries, GraphBuildConfig};
use crate::g2g::{
    adapt_pair, adjacency_from_graph, adjacency_from_weights, slice_windows, train_g2g, ModelMeta,
    TrainConfig, TrainPair,
};
use crate::numerics::SeededRng;
use crate::{Mat, Real};

/// A feature observation: either just the latest value or a full window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservedFeature {
    Latest(Real),
    Window(Vec<Real>),
}

/// One scenario step, applied in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioEvent {
    /// Pin an entity to observed values and propagate to a fixed point.
    Observe {
        entity_id: String,
        features: BTreeMap<String, ObservedFeature>,
    },
    RemoveEntity {
        entity_id: String,
    },
    AddEntity {
        entity_id: String,
        entity_type: String,
        /// Full feature histories for the new entity.
        features: Vec<(String, Vec<Real>)>,
        /// Arcs to create, each endpoint naming an existing entity or the
        /// new one.
        arcs: Vec<(String, String)>,
    },
    Rewire {
        #[serde(default)]
        add_arcs: Vec<(String, String)>,
        #[serde(default)]
        remove_arcs: Vec<(String, String)>,
    },
}

/// Training allowance for structural changes.
#[derive(Debug, Clone)]
pub struct TrainBudget {
    pub train: TrainConfig,
    /// Window stride when slicing training pairs.
    pub stride: usize,
    /// Ridge strength for new entities' regressors.
    pub ridge: Real,
    /// Cap on training runs per structural event; None is unlimited.
    pub max_trains: Option<usize>,
}

/// What one structural event did.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ChangeReport {
    pub event: String,
    pub removed_entities: Vec<String>,
    pub added_entities: Vec<String>,
    pub removed_arcs: Vec<(String, String)>,
    pub added_arcs: Vec<(String, String)>,
    /// Signatures trained in this event (cache misses).
    pub trained: Vec<String>,
    /// Signatures served from the database.
    pub cache_hits: Vec<String>,
}

/// Stable per-arc seed derivation, independent of processing order.
fn arc_seed(base: u64, source: &str, target: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    hasher.update(b"->");
    hasher.update(target.as_bytes());
    let digest = hasher.finalize();
    let mut tag = [0u8; 8];
    tag.copy_from_slice(&digest[..8]);
    SeededRng::new(base)
        .derive(u64::from_le_bytes(tag))
        .next_u64()
}

/// Fetches the arc's model from the database or trains it from the
/// endpoints' stored histories. A cache hit returns `None` for the report.
pub fn obtain_arc_model(
    system: &SystemGraph,
    db: &DtgDatabase,
    budget: &TrainBudget,
    source: &str,
    target: &str,
) -> Result<(ArcModel, Option<crate::g2g::TrainingReport>), SimulationError> {
    let source_entity = system
        .entity(source)
        .ok_or_else(|| SimulationError::DanglingEntity {
            entity: source.to_string(),
        })?;
    let target_entity = system
        .entity(target)
        .ok_or_else(|| SimulationError::DanglingEntity {
            entity: target.to_string(),
        })?;
    let window = system.window();
    let signature = Signature::g2g(
        &source_entity.graph.entity_type,
        &target_entity.graph.entity_type,
        target_entity.graph.feature_count(),
        window,
        &budget.train.hidden_dims,
        budget.train.delta,
        budget.train.lambda,
    );
    if let Some(model) = db.get_model(&signature)? {
        return Ok((ArcModel { model, signature }, None));
    }

    // Cache miss: train from tail-aligned histories.
    let seed = arc_seed(budget.train.seed, source, target);
    let adapted = adapt_pair(&source_entity.graph, &target_entity.graph, seed)?;
    let target_history = target_entity.graph.feature_matrix();
    let len = adapted.features.cols().min(target_history.cols());
    if len < window {
        return Err(SimulationError::InsufficientTrainingData {
            source_id: source.to_string(),
            target_id: target.to_string(),
            available: len,
            window,
        });
    }
    let tail = |m: &Mat| {
        let rows: Vec<Vec<Real>> = (0..m.rows())
            .map(|r| m.row(r)[m.cols() - len..].to_vec())
            .collect();
        Mat::from_rows(&rows).expect("finite tail slice")
    };
    let a_source = adjacency_from_weights(&adapted.weights, budget.train.delta)?;
    let a_target = adjacency_from_graph(&target_entity.graph, budget.train.delta)?;
    let source_windows = slice_windows(&tail(&adapted.features), window, budget.stride)?;
    let target_windows = slice_windows(&tail(&target_history), window, budget.stride)?;
    let pairs: Vec<TrainPair> = source_windows
        .into_iter()
        .zip(target_windows)
        .map(|(x_source, x_target)| TrainPair {
            x_source,
            a_source: a_source.clone(),
            x_target,
            a_target: a_target.clone(),
        })
        .collect();
    if pairs.is_empty() {
        return Err(SimulationError::InsufficientTrainingData {
            source_id: source.to_string(),
            target_id: target.to_string(),
            available: len,
            window,
        });
    }
    let mut config = budget.train.clone();
    config.seed = seed;
    let meta = ModelMeta {
        source_type: source_entity.graph.entity_type.clone(),
        target_type: target_entity.graph.entity_type.clone(),
        adaptation: adapted.record.clone(),
    };
    let (model, report) = train_g2g(meta, &pairs, &config)?;
    db.put_model(&signature, &model)?;
    Ok((ArcModel { model, signature }, Some(report)))
}

fn add_arc_lazily(
    system: &mut SystemGraph,
    db: &DtgDatabase,
    budget: &TrainBudget,
    source: &str,
    target: &str,
    report: &mut ChangeReport,
) -> Result<(), SimulationError> {
    if let Some(cap) = budget.max_trains {
        // Pre-check the budget only when this would be a fresh training run.
        let would_train = {
            let (src, tgt) = (system.entity(source), system.entity(target));
            match (src, tgt) {
                (Some(s), Some(t)) => {
                    let sig = Signature::g2g(
                        &s.graph.entity_type,
                        &t.graph.entity_type,
                        t.graph.feature_count(),
                        system.window(),
                        &budget.train.hidden_dims,
                        budget.train.delta,
                        budget.train.lambda,
                    );
                    db.get_model(&sig)?.is_none()
                }
                _ => false,
            }
        };
        if would_train && report.trained.len() >= cap {
            return Err(SimulationError::TrainBudgetExhausted { cap });
        }
    }
    let (arc, trained) = obtain_arc_model(system, db, budget, source, target)?;
    let signature = arc.signature.0.clone();
    system.insert_arc(source.to_string(), target.to_string(), arc)?;
    if trained.is_none() {
        report.cache_hits.push(signature);
    } else {
        report.trained.push(signature);
        system.training_runs += 1;
    }
    report
        .added_arcs
        .push((source.to_string(), target.to_string()));
    Ok(())
}

/// Applies one structural event: removes/adds entities and arcs, querying
/// the database before training anything new.
pub fn apply_structural_change(
    system: &mut SystemGraph,
    event: &ScenarioEvent,
    db: &DtgDatabase,
    budget: &TrainBudget,
) -> Result<ChangeReport, SimulationError> {
    match event {
        ScenarioEvent::Observe { .. } => Err(SimulationError::NotStructural),
        ScenarioEvent::RemoveEntity { entity_id } => {
            let incident: Vec<(String, String)> = system
                .arc_keys()
                .into_iter()
                .filter(|(s, t)| s == entity_id || t == entity_id)
                .collect();
            if system.remove_entity_internal(entity_id).is_none() {
                return Err(SimulationError::DanglingEntity {
                    entity: entity_id.clone(),
                });
            }
            Ok(ChangeReport {
                event: "remove_entity".to_string(),
                removed_entities: vec![entity_id.clone()],
                removed_arcs: incident,
                ..ChangeReport::default()
            })
        }
        ScenarioEvent::AddEntity {
            entity_id,
            entity_type,
            features,
            arcs,
        } => {
            if system.entity(entity_id).is_some() {
                return Err(SimulationError::DuplicateEntity {
                    entity: entity_id.clone(),
                });
            }
            // A history shorter than the window can neither seed the state
            // nor train any declared arc.
            let min_len = features.iter().map(|(_, v)| v.len()).min().unwrap_or(0);
            if min_len < system.window() {
                if let Some((source, target)) = arcs.first() {
                    return Err(SimulationError::InsufficientTrainingData {
                        source_id: source.clone(),
                        target_id: target.clone(),
                        available: min_len,
                        window: system.window(),
                    });
                }
                return Err(SimulationError::EntityHistoryTooShort {
                    entity: entity_id.clone(),
                    len: min_len,
                    window: system.window(),
                });
            }
            let series: Vec<FeatureSeries> = features
                .iter()
                .map(|(id, values)| FeatureSeries::new(id.clone(), values.clone()))
                .collect::<Result<_, _>>()?;
            let build = build_entity_graph(
                entity_id.clone(),
                entity_type.clone(),
                series,
                &GraphBuildConfig::default(),
            )?;
            let history = build.graph.feature_matrix().transpose();
            let regressors =
                fit_regressors(&build.graph, &history, budget.train.delta, budget.ridge)?;
            db.put_entity_template(&build.graph)?;
            system.add_entity_internal(build.graph, regressors)?;

            let mut report = ChangeReport {
                event: "add_entity".to_string(),
                added_entities: vec![entity_id.clone()],
                ..ChangeReport::default()
            };
            for (source, target) in arcs {
                add_arc_lazily(system, db, budget, source, target, &mut report)?;
            }
            Ok(report)
        }
        ScenarioEvent::Rewire {
            add_arcs,
            remove_arcs,
        } => {
            let mut report = ChangeReport {
                event: "rewire".to_string(),
                ..ChangeReport::default()
            };
            for (source, target) in remove_arcs {
                if system.remove_arc_internal(source, target).is_none() {
                    return Err(SimulationError::UnknownArc {
                        source_id: source.clone(),
                        target_id: target.clone(),
                    });
                }
                report.removed_arcs.push((source.clone(), target.clone()));
            }
            for (source, target) in add_arcs {
                add_arc_lazily(system, db, budget, source, target, &mut report)?;
            }
            Ok(report)
        }
    }
}

/// Scenario execution settings.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub epsilon: Real,
    pub max_iters: usize,
    pub budget: TrainBudget,
}

/// Everything a scenario run produced, in event order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub traces: Vec<SimulationTrace>,
    pub changes: Vec<ChangeReport>,
}

/// Runs a scenario: observe events merge into the persistent pin set and
/// propagate; structural events reshape the system (and drop pins of
/// removed entities).
pub fn run_scenario(
    system: &mut SystemGraph,
    events: &[ScenarioEvent],
    db: &DtgDatabase,
    ctx: &ScenarioContext,
) -> Result<ScenarioOutcome, SimulationError> {
    let mut outcome = ScenarioOutcome::default();
    let mut pins: BTreeMap<String, Mat> = BTreeMap::new();
    for event in events {
        match event {
            ScenarioEvent::Observe {
                entity_id,
                features,
            } => {
                let entity =
                    system
                        .entity(entity_id)
                        .ok_or_else(|| SimulationError::DanglingEntity {
                            entity: entity_id.clone(),
                        })?;
                let mut matrix = pins
                    .get(entity_id)
                    .cloned()
                    .unwrap_or_else(|| entity.state.clone());
                let last = matrix.cols() - 1;
                for (feature_id, observed) in features {
                    let row = entity.graph.node_index(feature_id).ok_or_else(|| {
                        SimulationError::UnknownFeature {
                            entity: entity_id.clone(),
                            feature: feature_id.clone(),
                        }
                    })?;
                    match observed {
                        ObservedFeature::Latest(value) => matrix.set(row, last, *value),
                        ObservedFeature::Window(values) => {
                            if values.len() != matrix.cols() {
                                return Err(SimulationError::ObservationShape {
                                    entity: entity_id.clone(),
                                    expected: (1, matrix.cols()),
                                    got: (1, values.len()),
                                });
                            }
                            matrix.set_row(row, values);
                        }
                    }
                }
                pins.insert(entity_id.clone(), matrix);
                let trace = system.propagate(&pins, ctx.epsilon, ctx.max_iters)?;
                outcome.traces.push(trace);
            }
            structural => {
                let report = apply_structural_change(system, structural, db, &ctx.budget)?;
                for removed in &report.removed_entities {
                    pins.remove(removed);
                }
                outcome.changes.push(report);
            }
        }
    }
    Ok(outcome)
}
