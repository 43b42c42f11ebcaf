//! The system-wide DTG: entity graphs as nodes, trained G2G models on
//! directed arcs, and fixed-point propagation of observed status changes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::db::Signature;
use super::SimulationError;
use crate::entity_graph::{EntityGraph, FeatureRegressor};
use crate::g2g::G2GModel;
use crate::gaen::GaenBundle;
use crate::{Mat, Real};

const REL_CHANGE_FLOOR: Real = 1e-12;

/// One entity inside the system: its graph, reconciliation models, optional
/// fusion bundle, and the current feature window (N_f x window).
#[derive(Debug, Clone)]
pub struct EntityState {
    pub graph: EntityGraph,
    pub regressors: Vec<FeatureRegressor>,
    pub fusion: Option<GaenBundle>,
    pub state: Mat,
}

/// A trained arc model plus the database signature it is cached under.
#[derive(Debug, Clone)]
pub struct ArcModel {
    pub model: G2GModel,
    pub signature: Signature,
}

/// Per-iteration propagation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub max_relative_change: Real,
    pub updated: Vec<String>,
    /// Entities whose latest values came from a fusion generator instead of
    /// the per-feature regressors.
    pub generator_reconciled: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub pinned: Vec<String>,
    pub iterations: usize,
    pub converged: bool,
    pub rows: Vec<TraceRow>,
}

/// Max relative change between two same-shape states, infinity norm over
/// entries relative to the previous state's magnitude.
pub fn relative_change(prev: &Mat, next: &Mat) -> Real {
    next.sub(prev)
        .map(|d| d.max_abs() / (prev.max_abs() + REL_CHANGE_FLOOR))
        .unwrap_or(Real::INFINITY)
}

/// Convergence test: every entity's relative change stays strictly below
/// epsilon.
pub fn converged(
    prev: &BTreeMap<String, Mat>,
    next: &BTreeMap<String, Mat>,
    epsilon: Real,
) -> bool {
    prev.len() == next.len()
        && prev.iter().all(|(id, p)| {
            next.get(id)
                .map(|n| relative_change(p, n) < epsilon)
                .unwrap_or(false)
        })
}

/// The digital twin graph of a whole system.
#[derive(Debug, Clone)]
pub struct SystemGraph {
    entities: BTreeMap<String, EntityState>,
    arcs: BTreeMap<(String, String), ArcModel>,
    window: usize,
    /// Cumulative count of G2G training runs triggered by structural
    /// changes (for lazy-training assertions).
    pub training_runs: usize,
}

impl SystemGraph {
    /// Assembles and validates a system. Initial state is each entity's
    /// trailing feature window.
    pub fn build(
        entities: Vec<(EntityGraph, Vec<FeatureRegressor>, Option<GaenBundle>)>,
        arcs: Vec<(String, String, ArcModel)>,
        window: usize,
    ) -> Result<Self, SimulationError> {
        let mut entity_map = BTreeMap::new();
        for (graph, regressors, fusion) in entities {
            let state = graph.trailing_window(window)?;
            if regressors.len() != graph.feature_count() {
                return Err(SimulationError::RegressorCount {
                    entity: graph.entity_id.clone(),
                    expected: graph.feature_count(),
                    got: regressors.len(),
                });
            }
            let id = graph.entity_id.clone();
            if entity_map
                .insert(
                    id.clone(),
                    EntityState {
                        graph,
                        regressors,
                        fusion,
                        state,
                    },
                )
                .is_some()
            {
                return Err(SimulationError::DuplicateEntity { entity: id });
            }
        }
        let mut system = Self {
            entities: entity_map,
            arcs: BTreeMap::new(),
            window,
            training_runs: 0,
        };
        for (source, target, arc) in arcs {
            system.insert_arc(source, target, arc)?;
        }
        Ok(system)
    }

    /// Validates and inserts one arc.
    pub fn insert_arc(
        &mut self,
        source: String,
        target: String,
        arc: ArcModel,
    ) -> Result<(), SimulationError> {
        if source == target {
            return Err(SimulationError::SelfArc { entity: source });
        }
        let source_entity =
            self.entities
                .get(&source)
                .ok_or_else(|| SimulationError::DanglingEntity {
                    entity: source.clone(),
                })?;
        let target_entity =
            self.entities
                .get(&target)
                .ok_or_else(|| SimulationError::DanglingEntity {
                    entity: target.clone(),
                })?;
        let model = &arc.model;
        let types_match = model.source_type == source_entity.graph.entity_type
            && model.target_type == target_entity.graph.entity_type;
        if !types_match {
            return Err(SimulationError::ArcTypeMismatch {
                source_id: source.clone(),
                target_id: target.clone(),
            });
        }
        let adapted_rows = model
            .adaptation
            .adapted_rows(source_entity.graph.feature_count());
        let shape_ok = model.order() == target_entity.graph.feature_count()
            && adapted_rows == model.order()
            && model.window() == self.window;
        if !shape_ok {
            return Err(SimulationError::ArcShapeMismatch {
                source_id: source,
                target_id: target,
                order: model.order(),
                window: model.window(),
            });
        }
        self.arcs.insert((source, target), arc);
        Ok(())
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn entity_ids(&self) -> Vec<String> {
        self.entities.keys().cloned().collect()
    }

    pub fn entity(&self, id: &str) -> Option<&EntityState> {
        self.entities.get(id)
    }

    pub fn entity_mut(&mut self, id: &str) -> Option<&mut EntityState> {
        self.entities.get_mut(id)
    }

    pub fn arc_keys(&self) -> Vec<(String, String)> {
        self.arcs.keys().cloned().collect()
    }

    pub fn arc(&self, source: &str, target: &str) -> Option<&ArcModel> {
        self.arcs.get(&(source.to_string(), target.to_string()))
    }

    pub fn state(&self) -> BTreeMap<String, Mat> {
        self.entities
            .iter()
            .map(|(id, e)| (id.clone(), e.state.clone()))
            .collect()
    }

    pub(crate) fn remove_entity_internal(&mut self, id: &str) -> Option<EntityState> {
        let removed = self.entities.remove(id)?;
        self.arcs.retain(|(s, t), _| s != id && t != id);
        Some(removed)
    }

    pub(crate) fn add_entity_internal(
        &mut self,
        graph: EntityGraph,
        regressors: Vec<FeatureRegressor>,
    ) -> Result<(), SimulationError> {
        let state = graph.trailing_window(self.window)?;
        let id = graph.entity_id.clone();
        if self.entities.contains_key(&id) {
            return Err(SimulationError::DuplicateEntity { entity: id });
        }
        self.entities.insert(
            id,
            EntityState {
                graph,
                regressors,
                fusion: None,
                state,
            },
        );
        Ok(())
    }

    pub(crate) fn remove_arc_internal(&mut self, source: &str, target: &str) -> Option<ArcModel> {
        self.arcs.remove(&(source.to_string(), target.to_string()))
    }

    /// Propagates observed status changes until the system stabilizes.
    ///
    /// Observations pin their entities for the whole run. Each synchronous
    /// round recomputes, from the previous round's state, every arc whose
    /// source changed; targets with several changed in-arcs average the
    /// G2G outputs; updated unobserved entities then have each feature's
    /// latest value reconciled by its regressor (or the fusion generator
    /// when one exists). Non-convergence within max_iters is reported in
    /// the trace, not an error.
    pub fn propagate(
        &mut self,
        observations: &BTreeMap<String, Mat>,
        epsilon: Real,
        max_iters: usize,
    ) -> Result<SimulationTrace, SimulationError> {
        if epsilon <= 0.0 {
            return Err(SimulationError::BadEpsilon { epsilon });
        }
        for (id, obs) in observations {
            let entity = self
                .entities
                .get(id)
                .ok_or_else(|| SimulationError::DanglingEntity { entity: id.clone() })?;
            if obs.shape() != entity.state.shape() {
                return Err(SimulationError::ObservationShape {
                    entity: id.clone(),
                    expected: entity.state.shape(),
                    got: obs.shape(),
                });
            }
        }

        // Pin observed entities; they seed the changed set.
        let mut changed: BTreeSet<String> = BTreeSet::new();
        for (id, obs) in observations {
            let entity = self.entities.get_mut(id).expect("validated above");
            if &entity.state != obs {
                changed.insert(id.clone());
                entity.state = obs.clone();
            }
        }

        let mut rows = Vec::new();
        let mut converged_flag = false;
        let mut iterations = 0;
        for iteration in 1..=max_iters {
            iterations = iteration;

            // Collect G2G updates from arcs whose source changed last round.
            let mut pending: BTreeMap<String, (Mat, usize)> = BTreeMap::new();
            for ((source, target), arc) in &self.arcs {
                if !changed.contains(source) || observations.contains_key(target) {
                    continue;
                }
                let source_state = &self.entities[source].state;
                let adapted = arc.model.adaptation.apply_to(source_state)?;
                let output = arc.model.apply(&adapted)?;
                match pending.remove(target) {
                    None => {
                        pending.insert(target.clone(), (output.features, 1));
                    }
                    Some((sum, count)) => {
                        pending.insert(target.clone(), (sum.add(&output.features)?, count + 1));
                    }
                }
            }

            // Commit: average multi-arc updates, then reconcile each
            // feature's latest value.
            let mut next_changed = BTreeSet::new();
            let mut updated = Vec::new();
            let mut generator_reconciled = Vec::new();
            let mut max_rel: Real = 0.0;
            for (target, (sum, count)) in pending {
                let mut candidate = sum.scale(1.0 / count as Real);
                let entity = &self.entities[&target];
                let used_generator = reconcile_latest(&mut candidate, entity)?;
                if used_generator {
                    generator_reconciled.push(target.clone());
                }
                let rel = relative_change(&self.entities[&target].state, &candidate);
                max_rel = max_rel.max(rel);
                if candidate != self.entities[&target].state {
                    next_changed.insert(target.clone());
                }
                updated.push(target.clone());
                self.entities.get_mut(&target).expect("validated").state = candidate;
            }

            rows.push(TraceRow {
                iteration,
                max_relative_change: max_rel,
                updated,
                generator_reconciled,
            });
            changed = next_changed;
            if max_rel < epsilon {
                converged_flag = true;
                break;
            }
        }

        Ok(SimulationTrace {
            pinned: observations.keys().cloned().collect(),
            iterations,
            converged: converged_flag,
            rows,
        })
    }
}

/// Refreshes the latest column of `candidate` from the entity's
/// reconciliation models. Returns true when the fusion generator was used.
/// Constant (neighborless) regressors are skipped: they carry no relational
/// information and would overwrite propagated values with stale means.
fn reconcile_latest(candidate: &mut Mat, entity: &EntityState) -> Result<bool, SimulationError> {
    let last = candidate.cols() - 1;
    let latest: Vec<Real> = (0..candidate.rows())
        .map(|f| candidate.get(f, last))
        .collect();
    if let Some(bundle) = &entity.fusion {
        let refreshed = bundle
            .generator
            .predict(&latest)
            .map_err(|e| SimulationError::Fusion {
                entity: entity.graph.entity_id.clone(),
                message: e.to_string(),
            })?;
        for (f, v) in refreshed.into_iter().enumerate() {
            candidate.set(f, last, v);
        }
        return Ok(true);
    }
    for regressor in &entity.regressors {
        if regressor.is_constant() {
            continue;
        }
        let inputs: Vec<Real> = regressor.neighbors.iter().map(|&j| latest[j]).collect();
        let value = regressor.predict(&inputs)?;
        candidate.set(regressor.target, last, value);
    }
    Ok(false)
}
