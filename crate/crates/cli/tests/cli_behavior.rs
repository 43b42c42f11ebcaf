#![allow(clippy::needless_range_loop)]

//! Command-level behavior: exit codes, the single-line error JSON, and the
//! spec'd end-to-end edge cases.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use dtg_cli::synth::{write_demo, ChainSpec};
use dtg_core::Mat;

const DTG: &str = env!("CARGO_BIN_EXE_dtg");

struct Run {
    ok: bool,
    stdout: String,
}

fn dtg(args: &[&str]) -> Run {
    let output = Command::new(DTG).args(args).output().expect("spawn dtg");
    Run {
        ok: output.status.success(),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
    }
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "dtg-cli-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn prepared_project(tag: &str) -> PathBuf {
    let dir = temp_dir(tag);
    write_demo(&dir, &ChainSpec::default()).unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run_build_and_train(dir: &Path) {
    let config = dir.join("config.json");
    let topology = dir.join("topology.json");
    assert!(
        dtg(&[
            "build-entity",
            "--config",
            path_str(&config),
            "--topology",
            path_str(&topology)
        ])
        .ok
    );
    assert!(
        dtg(&[
            "train-g2g",
            "--config",
            path_str(&config),
            "--topology",
            path_str(&topology)
        ])
        .ok
    );
}

#[test]
fn failure_emits_single_line_error_json_and_nonzero_exit() {
    let run = dtg(&[
        "build-entity",
        "--config",
        "/no/such/config.json",
        "--topology",
        "/no/such/topology.json",
    ]);
    assert!(!run.ok);
    let lines: Vec<&str> = run.stdout.lines().collect();
    assert_eq!(lines.len(), 1, "expected one line, got {:?}", lines);
    let parsed: serde_json::Value = serde_json::from_str(lines[0]).expect("machine-readable");
    assert!(parsed["error"]["kind"].is_string());
    assert!(parsed["error"]["message"].is_string());
}

#[test]
fn empty_scenario_leaves_state_untouched() {
    let dir = prepared_project("empty-scenario");
    run_build_and_train(&dir);
    std::fs::write(dir.join("scenario.json"), "[]\n").unwrap();
    let run = dtg(&[
        "simulate",
        "--config",
        path_str(&dir.join("config.json")),
        "--system",
        path_str(&dir.join("out/system.json")),
        "--scenario",
        path_str(&dir.join("scenario.json")),
    ]);
    assert!(run.ok, "{}", run.stdout);

    // Final state equals each entity's trailing window of its ingested data.
    let state: BTreeMap<String, Mat> =
        serde_json::from_slice(&std::fs::read(dir.join("out/final_state.json")).unwrap()).unwrap();
    let data = dtg_cli::synth::chain_data(&ChainSpec::default());
    let window = 8;
    let len = ChainSpec::default().len;
    for (id, source) in [
        ("head", &data.head),
        ("mid", &data.mid),
        ("tail", &data.tail),
    ] {
        let got = &state[id];
        for f in 0..3 {
            for w in 0..window {
                assert_eq!(
                    got.get(f, w),
                    source[f][len - window + w],
                    "{id} feature {f} column {w}"
                );
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn db_verify_names_the_flipped_record() {
    let dir = prepared_project("bitflip");
    run_build_and_train(&dir);
    let config = dir.join("config.json");

    // Healthy database first.
    assert!(dtg(&["db", "--config", path_str(&config), "list"]).ok);
    assert!(dtg(&["db", "--config", path_str(&config), "verify"]).ok);

    // Flip one byte in some record file.
    let db_dir = dir.join("db");
    let record = std::fs::read_dir(&db_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.extension().is_some_and(|ext| ext == "rec"))
        .expect("a record file");
    let mut bytes = std::fs::read(&record).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    std::fs::write(&record, bytes).unwrap();

    let run = dtg(&["db", "--config", path_str(&config), "verify"]);
    assert!(!run.ok, "verify should fail after the bit flip");
    let parsed: serde_json::Value = serde_json::from_str(run.stdout.trim()).unwrap();
    let message = parsed["error"]["message"].as_str().unwrap();
    let flipped_sig = record.file_stem().unwrap().to_str().unwrap();
    assert!(
        message.contains(flipped_sig),
        "error does not name the record: {message}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn train_before_build_is_a_clear_error() {
    let dir = prepared_project("order");
    let run = dtg(&[
        "train-g2g",
        "--config",
        path_str(&dir.join("config.json")),
        "--topology",
        path_str(&dir.join("topology.json")),
    ]);
    assert!(!run.ok);
    let parsed: serde_json::Value = serde_json::from_str(run.stdout.trim()).unwrap();
    assert!(parsed["error"]["message"]
        .as_str()
        .unwrap()
        .contains("build-entity"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fuse_rejects_unknown_entity_and_broken_dkm() {
    let dir = prepared_project("fuse-errors");
    let config = dir.join("config.json");
    let topology = dir.join("topology.json");
    assert!(
        dtg(&[
            "build-entity",
            "--config",
            path_str(&config),
            "--topology",
            path_str(&topology)
        ])
        .ok
    );

    let run = dtg(&["fuse", "--config", path_str(&config), "--entity", "ghost"]);
    assert!(!run.ok);

    // A DKM declaring the wrong dimension is rejected at registration.
    let bad_dkm = format!("{DTG} dkm-demo identity 7");
    let run = dtg(&[
        "fuse",
        "--config",
        path_str(&config),
        "--entity",
        "head",
        "--dkm",
        &bad_dkm,
    ]);
    assert!(!run.ok);
    let parsed: serde_json::Value = serde_json::from_str(run.stdout.trim()).unwrap();
    assert_eq!(parsed["error"]["kind"], "gaen");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_csv_errors_carry_line_numbers() {
    let dir = temp_dir("bad-csv");
    std::fs::create_dir_all(dir.join("data")).unwrap();
    std::fs::write(
        dir.join("data/bad.csv"),
        "timestamp,f0,f1\n0,1.0,2.0\n1,1.1,2.1\n1,1.2,2.2\n3,1.3,2.3\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("topology.json"),
        r#"{"entities":[{"id":"e","type":"t","data":"bad.csv"}],"arcs":[]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.join("config.json"),
        r#"{"paths":{"data_dir":"data","db_dir":"db","output_dir":"out"}}"#,
    )
    .unwrap();
    let run = dtg(&[
        "build-entity",
        "--config",
        path_str(&dir.join("config.json")),
        "--topology",
        path_str(&dir.join("topology.json")),
    ]);
    assert!(!run.ok);
    let parsed: serde_json::Value = serde_json::from_str(run.stdout.trim()).unwrap();
    let message = parsed["error"]["message"].as_str().unwrap();
    assert!(message.contains(":4:"), "missing line number: {message}");
    assert!(message.contains("duplicate timestamp"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn topology_validation_rejects_bad_arcs() {
    let dir = temp_dir("bad-topo");
    std::fs::write(dir.join("config.json"), "{}").unwrap();
    std::fs::write(
        dir.join("topology.json"),
        r#"{"entities":[{"id":"a","type":"t","data":"a.csv"}],"arcs":[["a","ghost"]]}"#,
    )
    .unwrap();
    let run = dtg(&[
        "build-entity",
        "--config",
        path_str(&dir.join("config.json")),
        "--topology",
        path_str(&dir.join("topology.json")),
    ]);
    assert!(!run.ok);
    let parsed: serde_json::Value = serde_json::from_str(run.stdout.trim()).unwrap();
    assert_eq!(parsed["error"]["kind"], "topology");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn structural_scenario_runs_through_the_cli() {
    let dir = prepared_project("structural");
    run_build_and_train(&dir);
    // Remove the tail, then observe the head: propagation should still
    // converge on the shrunken system.
    let scenario = serde_json::json!([
        { "kind": "remove_entity", "entity_id": "tail" },
        { "kind": "observe", "entity_id": "head", "features": { "f0": 4.5 } }
    ]);
    std::fs::write(
        dir.join("scenario.json"),
        serde_json::to_vec_pretty(&scenario).unwrap(),
    )
    .unwrap();
    let run = dtg(&[
        "simulate",
        "--config",
        path_str(&dir.join("config.json")),
        "--system",
        path_str(&dir.join("out/system.json")),
        "--scenario",
        path_str(&dir.join("scenario.json")),
    ]);
    assert!(run.ok, "{}", run.stdout);
    let state: BTreeMap<String, Mat> =
        serde_json::from_slice(&std::fs::read(dir.join("out/final_state.json")).unwrap()).unwrap();
    assert!(!state.contains_key("tail"));
    assert_eq!(state["head"].get(0, 7), 4.5);
    std::fs::remove_dir_all(&dir).ok();
}
