//! Deterministic synthetic system: a 3-entity chain where each downstream
//! entity's features are a fixed linear map of its upstream entity plus 1%
//! multiplicative noise. Used by the bundled demo and the test oracles.
//!
//! Per entity: features f0 and f1 ride a shared positive latent (strongly
//! correlated), f2 rides an independent negative latent. That geometry
//! keeps correlation-thresholded adjacencies consistent with dot-product
//! decoding: connected pairs have large positive dots, disconnected pairs
//! large negative ones.

use std::io::Write;
use std::path::Path;

use dtg_core::numerics::SeededRng;
use dtg_core::Real;

pub const FEATURES: usize = 3;

/// Linear response map of entity B to entity A: block-mixing the two
/// latent-driven features, scaling the independent one.
pub const MAP_AB: [[Real; 3]; 3] = [[0.70, 0.30, 0.0], [0.62, 0.38, 0.0], [0.0, 0.0, 0.90]];

/// Linear response map of entity C to entity B.
pub const MAP_BC: [[Real; 3]; 3] = [[0.55, 0.45, 0.0], [0.50, 0.50, 0.0], [0.0, 0.0, 0.85]];

#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub len: usize,
    pub seed: u64,
    /// Multiplicative noise amplitude on downstream entities.
    pub noise: Real,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self {
            len: 240,
            seed: 977,
            noise: 0.01,
        }
    }
}

/// Per-entity feature histories, one Vec per feature.
#[derive(Debug, Clone)]
pub struct ChainData {
    pub head: Vec<Vec<Real>>,
    pub mid: Vec<Vec<Real>>,
    pub tail: Vec<Vec<Real>>,
}

pub fn apply_map(map: &[[Real; 3]; 3], input: &[Real; 3]) -> [Real; 3] {
    [
        map[0][0] * input[0] + map[0][1] * input[1] + map[0][2] * input[2],
        map[1][0] * input[0] + map[1][1] * input[1] + map[1][2] * input[2],
        map[2][0] * input[0] + map[2][1] * input[1] + map[2][2] * input[2],
    ]
}

pub fn chain_data(spec: &ChainSpec) -> ChainData {
    let mut rng = SeededRng::new(spec.seed);
    let len = spec.len;
    let latent = |i: usize| 3.0 + (i as Real * 0.13).sin() + 0.5 * (i as Real * 0.041).cos();
    let latent_neg =
        |i: usize| -2.0 - 0.4 * (i as Real * 0.087).sin() - 0.25 * (i as Real * 0.029).cos();

    let mut head = vec![Vec::new(); FEATURES];
    for i in 0..len {
        head[0].push(latent(i) + rng.uniform(-0.05, 0.05));
        head[1].push(0.8 * latent(i) + 0.1 + rng.uniform(-0.05, 0.05));
        head[2].push(latent_neg(i) + rng.uniform(-0.05, 0.05));
    }
    let downstream = |map: &[[Real; 3]; 3], src: &[Vec<Real>], rng: &mut SeededRng| {
        let mut out = vec![Vec::new(); FEATURES];
        for i in 0..len {
            let input = [src[0][i], src[1][i], src[2][i]];
            let mapped = apply_map(map, &input);
            for (f, value) in mapped.into_iter().enumerate() {
                out[f].push(value * (1.0 + rng.uniform(-spec.noise, spec.noise)));
            }
        }
        out
    };
    let mid = downstream(&MAP_AB, &head, &mut rng);
    let tail = downstream(&MAP_BC, &mid, &mut rng);
    ChainData { head, mid, tail }
}

fn write_csv(path: &Path, features: &[Vec<Real>]) -> std::io::Result<()> {
    let mut out = String::from("timestamp,f0,f1,f2\n");
    for i in 0..features[0].len() {
        out.push_str(&format!(
            "{i},{:?},{:?},{:?}\n",
            features[0][i], features[1][i], features[2][i]
        ));
    }
    std::fs::write(path, out)
}

/// Writes the complete demo project (config, topology, data, scenario)
/// into `dir`. Deterministic: same spec, same bytes.
pub fn write_demo(dir: &Path, spec: &ChainSpec) -> std::io::Result<()> {
    let data_dir = dir.join("data");
    std::fs::create_dir_all(&data_dir)?;
    let data = chain_data(spec);
    write_csv(&data_dir.join("head.csv"), &data.head)?;
    write_csv(&data_dir.join("mid.csv"), &data.mid)?;
    write_csv(&data_dir.join("tail.csv"), &data.tail)?;

    let config = serde_json::json!({
        "delta": 0.3,
        "lambda": 1.0,
        "window": 8,
        "stride": 2,
        "learning_rate": 0.005,
        "momentum": 0.5,
        "grad_clip": 1.0,
        "epochs": 1500,
        "epsilon": 1e-4,
        "max_iters": 100,
        "ridge": 1e-8,
        "seed": 4,
        "paths": { "data_dir": "data", "db_dir": "db", "output_dir": "out" }
    });
    write_pretty(&dir.join("config.json"), &config)?;

    let topology = serde_json::json!({
        "entities": [
            { "id": "head", "type": "source-unit", "data": "head.csv" },
            { "id": "mid", "type": "relay-unit", "data": "mid.csv" },
            { "id": "tail", "type": "sink-unit", "data": "tail.csv" }
        ],
        "arcs": [["head", "mid"], ["mid", "tail"]]
    });
    write_pretty(&dir.join("topology.json"), &topology)?;

    // Scale the head entity's trailing window by 15% and let the change
    // propagate down the chain.
    let window = 8;
    let len = spec.len;
    let scaled: Vec<serde_json::Value> = (0..FEATURES)
        .map(|f| {
            let values: Vec<Real> = data.head[f][len - window..]
                .iter()
                .map(|v| v * 1.15)
                .collect();
            serde_json::json!(values)
        })
        .collect();
    let scenario = serde_json::json!([
        {
            "kind": "observe",
            "entity_id": "head",
            "features": {
                "f0": scaled[0],
                "f1": scaled[1],
                "f2": scaled[2]
            }
        }
    ]);
    write_pretty(&dir.join("scenario.json"), &scenario)?;
    Ok(())
}

fn write_pretty(path: &Path, value: &serde_json::Value) -> std::io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable demo file");
    bytes.push(b'\n');
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)
}
