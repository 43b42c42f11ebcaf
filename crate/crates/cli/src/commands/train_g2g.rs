//! `dtg train-g2g`: adapt every declared arc's endpoint pair, train (or
//! fetch from the database) its transformation model, and write the system
//! manifest plus per-arc loss curves.

use std::io::Write;
use std::path::{Component, Path, PathBuf};

use serde_json::json;

use dtg_core::g2g::TrainingReport;
use dtg_core::simulation::{obtain_arc_model, DtgDatabase, SystemGraph, TrainBudget};

use crate::artifacts::{
    read_json, safe_name, write_json, EntityReport, ManifestArc, ManifestEntity, SystemManifest,
    TopologyFile,
};
use crate::config::ProjectConfig;
use crate::error::CliError;

pub fn run(config_path: &Path, topology_path: &Path) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let topology = TopologyFile::load(topology_path)?;
    let db = DtgDatabase::open(&config.paths.db_dir)?;
    let out_dir = &config.paths.output_dir;
    let entities_dir = out_dir.join("entities");

    // Assemble the arc-less system from the build-entity artifacts.
    let mut entities = Vec::new();
    let mut manifest_entities = Vec::new();
    for entity in &topology.entities {
        let report_file = entities_dir.join(format!("{}.json", safe_name(&entity.id)));
        if !report_file.exists() {
            return Err(CliError::Invalid(format!(
                "missing entity report {} (run build-entity first)",
                report_file.display()
            )));
        }
        let report: EntityReport = read_json(&report_file)?;
        entities.push((report.graph()?, report.regressors.clone(), None));
        manifest_entities.push(ManifestEntity {
            id: entity.id.clone(),
            entity_type: entity.entity_type.clone(),
            report: PathBuf::from("entities").join(format!("{}.json", safe_name(&entity.id))),
            fusion: None,
        });
    }
    let mut system = SystemGraph::build(entities, Vec::new(), config.window)?;

    let budget = TrainBudget {
        train: config.train_config(),
        stride: config.stride,
        ridge: config.ridge,
        max_trains: None,
    };
    let losses_dir = out_dir.join("losses");
    let mut manifest_arcs = Vec::new();
    let mut trained = 0usize;
    let mut cache_hits = 0usize;
    for (source, target) in &topology.arcs {
        let (arc, report) = obtain_arc_model(&system, &db, &budget, source, target)?;
        match report {
            Some(report) => {
                trained += 1;
                write_loss_curve(&losses_dir, source, target, &report)?;
            }
            None => cache_hits += 1,
        }
        manifest_arcs.push(ManifestArc {
            source: source.clone(),
            target: target.clone(),
            signature: arc.signature.0.clone(),
        });
        system.insert_arc(source.clone(), target.clone(), arc)?;
    }

    let manifest = SystemManifest {
        window: config.window,
        delta: config.delta,
        lambda: config.lambda,
        entities: manifest_entities,
        arcs: manifest_arcs,
        db_dir: relative_to(out_dir, &config.paths.db_dir),
    };
    write_json(&out_dir.join("system.json"), &manifest)?;
    Ok(json!({
        "ok": true,
        "command": "train-g2g",
        "arcs": topology.arcs.len(),
        "trained": trained,
        "cache_hits": cache_hits,
    }))
}

fn write_loss_curve(
    dir: &Path,
    source: &str,
    target: &str,
    report: &TrainingReport,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::File {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    let path = dir.join(format!("{}__{}.csv", safe_name(source), safe_name(target)));
    let mut out = String::from("epoch,loss,smoothed\n");
    for (epoch, (loss, smoothed)) in report
        .loss_history
        .iter()
        .zip(&report.smoothed_loss)
        .enumerate()
    {
        out.push_str(&format!("{epoch},{loss},{smoothed}\n"));
    }
    let mut file = std::fs::File::create(&path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    file.write_all(out.as_bytes()).map_err(|e| CliError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Best-effort relative path from `base` to `target` (component-wise walk;
/// falls back to the absolute path when they share no prefix).
fn relative_to(base: &Path, target: &Path) -> PathBuf {
    let base_parts: Vec<Component> = base.components().collect();
    let target_parts: Vec<Component> = target.components().collect();
    let common = base_parts
        .iter()
        .zip(&target_parts)
        .take_while(|(a, b)| a == b)
        .count();
    if common == 0 {
        return target.to_path_buf();
    }
    let mut rel = PathBuf::new();
    for _ in common..base_parts.len() {
        rel.push("..");
    }
    for part in &target_parts[common..] {
        rel.push(part.as_os_str());
    }
    if rel.as_os_str().is_empty() {
        rel.push(".");
    }
    rel
}
