//! `dtg simulate`: load the trained system, run a scenario file, and write
//! the final state, the trace, and an optional DOT export.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::json;

use dtg_core::simulation::{
    run_scenario, ArcModel, DtgDatabase, ScenarioContext, ScenarioEvent, Signature, SystemGraph,
    TrainBudget,
};
use dtg_core::Mat;

use crate::artifacts::{
    read_json, safe_name, write_json, EntityReport, FusionReportFile, SystemManifest,
};
use crate::config::ProjectConfig;
use crate::error::CliError;

pub fn run(
    config_path: &Path,
    system_path: &Path,
    scenario_path: &Path,
    dot_path: Option<&Path>,
) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let manifest = SystemManifest::load(system_path)?;
    let manifest_dir = system_path.parent().unwrap_or(Path::new("."));
    let db = DtgDatabase::open(manifest_dir.join(&manifest.db_dir))?;

    // Entities: reports plus any fusion bundles produced by `fuse`.
    let mut entities = Vec::new();
    for entry in &manifest.entities {
        let report: EntityReport = read_json(&manifest_dir.join(&entry.report))?;
        let fusion_path = match &entry.fusion {
            Some(p) => manifest_dir.join(p),
            None => manifest_dir
                .join("fusion")
                .join(format!("{}.json", safe_name(&entry.id))),
        };
        let fusion = if fusion_path.exists() {
            let file: FusionReportFile = read_json(&fusion_path)?;
            eprintln!("[simulate] {}: using fusion generator", entry.id);
            Some(file.bundle)
        } else {
            None
        };
        entities.push((report.graph()?, report.regressors.clone(), fusion));
    }

    // Arcs: models fetched from the database by signature.
    let mut arcs = Vec::new();
    for arc in &manifest.arcs {
        let signature = Signature(arc.signature.clone());
        let model = db.get_model(&signature)?.ok_or_else(|| {
            CliError::Invalid(format!(
                "model {} for arc {}->{} is missing from the database",
                arc.signature, arc.source, arc.target
            ))
        })?;
        arcs.push((
            arc.source.clone(),
            arc.target.clone(),
            ArcModel { model, signature },
        ));
    }
    let mut system = SystemGraph::build(entities, arcs, manifest.window)?;

    let events: Vec<ScenarioEvent> = read_json(scenario_path)?;
    let ctx = ScenarioContext {
        epsilon: config.epsilon,
        max_iters: config.max_iters,
        budget: TrainBudget {
            train: config.train_config(),
            stride: config.stride,
            ridge: config.ridge,
            max_trains: None,
        },
    };
    let outcome = run_scenario(&mut system, &events, &db, &ctx)?;

    let out_dir = &config.paths.output_dir;
    let state: BTreeMap<String, Mat> = system.state();
    write_json(&out_dir.join("final_state.json"), &state)?;
    write_json(&out_dir.join("trace.json"), &outcome)?;
    if let Some(dot) = dot_path {
        let rendered = render_dot(&system);
        std::fs::write(dot, rendered).map_err(|e| CliError::File {
            path: dot.display().to_string(),
            message: e.to_string(),
        })?;
    }

    let converged_all = outcome.traces.iter().all(|t| t.converged);
    Ok(json!({
        "ok": true,
        "command": "simulate",
        "events": events.len(),
        "propagations": outcome.traces.len(),
        "structural_changes": outcome.changes.len(),
        "all_converged": converged_all,
    }))
}

fn render_dot(system: &SystemGraph) -> String {
    let mut out = String::from("digraph dtg {\n");
    for id in system.entity_ids() {
        let entity = system.entity(&id).expect("listed id");
        out.push_str(&format!(
            "  \"{id}\" [label=\"{id}\\n{} ({} features)\"];\n",
            entity.graph.entity_type,
            entity.graph.feature_count()
        ));
    }
    for (source, target) in system.arc_keys() {
        out.push_str(&format!("  \"{source}\" -> \"{target}\";\n"));
    }
    out.push_str("}\n");
    out
}
