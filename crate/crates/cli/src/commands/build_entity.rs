//! `dtg build-entity`: ingest every declared entity's sensor data, build
//! its correlation graph, fit its feature regressors, and write per-entity
//! reports.

use std::path::Path;

use serde_json::json;

use dtg_core::entity_graph::{build_entity_graph, fit_regressors, GraphBuildConfig};
use dtg_core::g2g::adjacency_from_graph;
use dtg_core::simulation::DtgDatabase;

use crate::artifacts::{
    safe_name, write_json, ConfidenceTable, EntityReport, ReportFeature, TopologyFile,
};
use crate::config::ProjectConfig;
use crate::error::CliError;
use crate::ingest::ingest;

pub fn run(config_path: &Path, topology_path: &Path) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let topology = TopologyFile::load(topology_path)?;
    let db = DtgDatabase::open(&config.paths.db_dir)?;
    let entities_dir = config.paths.output_dir.join("entities");

    let mut written = Vec::new();
    for entity in &topology.entities {
        let data_path = config.paths.data_dir.join(&entity.data);
        let (series, gap_report) = ingest(&data_path)?;
        if gap_report.total_filled > 0 {
            eprintln!(
                "[build-entity] {}: filled {} gap(s)",
                entity.id, gap_report.total_filled
            );
        }
        let build = build_entity_graph(
            entity.id.clone(),
            entity.entity_type.clone(),
            series,
            &GraphBuildConfig::default(),
        )?;
        let history = build.graph.feature_matrix().transpose();
        let regressors = fit_regressors(&build.graph, &history, config.delta, config.ridge)?;
        let adjacency = adjacency_from_graph(&build.graph, config.delta)?;
        db.put_entity_template(&build.graph)?;

        let report = EntityReport {
            entity_id: build.graph.entity_id.clone(),
            entity_type: build.graph.entity_type.clone(),
            correlation_method: build.graph.correlation_method,
            confidence: ConfidenceTable {
                pearson: build.report.pearson.mean_confidence,
                spearman: build.report.spearman.mean_confidence,
                kendall: build.report.kendall.mean_confidence,
            },
            arc_weights: build.graph.arc_weights.clone(),
            adjacency,
            features: build
                .graph
                .nodes
                .iter()
                .map(|n| ReportFeature {
                    id: n.feature_id.clone(),
                    unit: n.unit.clone(),
                    values: n.values.clone(),
                })
                .collect(),
            regressors,
            gap_report,
        };
        let file = entities_dir.join(format!("{}.json", safe_name(&entity.id)));
        write_json(&file, &report)?;
        written.push(entity.id.clone());
    }
    Ok(json!({
        "ok": true,
        "command": "build-entity",
        "entities": written,
    }))
}
