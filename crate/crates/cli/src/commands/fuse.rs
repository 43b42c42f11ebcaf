//! `dtg fuse`: build the trust-weighted ensemble for one entity from its
//! regressors plus external DKMs, distill it into a generator, and write
//! the fusion report.

use std::path::Path;

use serde_json::json;

use dtg_core::gaen::{distill, register_dkm, EnsembleModel, GaenBundle, PredictorHandle};
use dtg_core::numerics::SeededRng;
use dtg_core::Real;

use crate::artifacts::{read_json, safe_name, write_json, EntityReport, FusionReportFile};
use crate::config::ProjectConfig;
use crate::error::CliError;

/// `CMD[:weight]`: a trailing `:<number>` is the trust weight.
fn parse_dkm_spec(spec: &str) -> (String, Real) {
    if let Some((cmd, weight)) = spec.rsplit_once(':') {
        if let Ok(weight) = weight.parse::<Real>() {
            return (cmd.to_string(), weight);
        }
    }
    (spec.to_string(), 1.0)
}

pub fn run(
    config_path: &Path,
    entity_id: &str,
    dkm_specs: &[String],
) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let report_path = config
        .paths
        .output_dir
        .join("entities")
        .join(format!("{}.json", safe_name(entity_id)));
    if !report_path.exists() {
        return Err(CliError::Invalid(format!(
            "missing entity report {} (run build-entity first)",
            report_path.display()
        )));
    }
    let report: EntityReport = read_json(&report_path)?;
    let dim = report.features.len();

    let mut members = vec![PredictorHandle::internal(report.regressors.clone(), 1.0)?];
    for spec in dkm_specs {
        let (command, weight) = parse_dkm_spec(spec);
        members.push(register_dkm(
            &command,
            weight,
            dim,
            config.fusion.dkm_timeout(),
        )?);
    }
    let mut ensemble = EnsembleModel::new(members)?;

    let seed = derive_seed(config.seed, entity_id);
    let fusion_config = config.fusion.to_fusion_config(seed);
    let (generator, distill_report) = distill(&mut ensemble, &fusion_config)?;

    let bundle = GaenBundle {
        entity_id: entity_id.to_string(),
        members: ensemble.descriptors(),
        normalized_weights: ensemble.normalized_weights(),
        generator,
        report: distill_report.clone(),
    };
    let fusion_path = config
        .paths
        .output_dir
        .join("fusion")
        .join(format!("{}.json", safe_name(entity_id)));
    write_json(&fusion_path, &FusionReportFile { bundle })?;

    Ok(json!({
        "ok": true,
        "command": "fuse",
        "entity": entity_id,
        "members": ensemble.descriptors().len(),
        "converged": distill_report.converged,
        "final_accuracy": distill_report.final_accuracy,
        "epochs_run": distill_report.epochs_run,
        "generator_param_count": distill_report.generator_param_count,
        "ensemble_param_count": distill_report.ensemble_param_count,
    }))
}

fn derive_seed(base: u64, entity_id: &str) -> u64 {
    // Stable id hash via the same xoshiro derivation used for arcs.
    let mut tag: u64 = 0xcbf29ce484222325;
    for b in entity_id.bytes() {
        tag ^= b as u64;
        tag = tag.wrapping_mul(0x100000001b3);
    }
    SeededRng::new(base).derive(tag).next_u64()
}
