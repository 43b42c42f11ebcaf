//! `dtg db`: inventory and checksum verification of the model database.

use std::path::Path;

use serde_json::json;

use dtg_core::simulation::DtgDatabase;

use crate::config::ProjectConfig;
use crate::error::CliError;

pub fn list(config_path: &Path) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let db = DtgDatabase::open(&config.paths.db_dir)?;
    let records: Vec<serde_json::Value> = db
        .list()?
        .into_iter()
        .map(|(sig, entry)| {
            json!({
                "signature": sig.0,
                "file": entry.file,
                "kind": entry.kind,
                "sha256": entry.sha256,
            })
        })
        .collect();
    Ok(json!({
        "ok": true,
        "command": "db list",
        "records": records,
    }))
}

pub fn verify(config_path: &Path) -> Result<serde_json::Value, CliError> {
    let config = ProjectConfig::load(config_path)?;
    let db = DtgDatabase::open(&config.paths.db_dir)?;
    let failures = db.verify()?;
    if let Some((sig, reason)) = failures.first() {
        return Err(CliError::Invalid(format!(
            "database verification failed for record {}: {reason} ({} failing record(s))",
            sig.0,
            failures.len()
        )));
    }
    Ok(json!({
        "ok": true,
        "command": "db verify",
        "records": db.list()?.len(),
    }))
}
