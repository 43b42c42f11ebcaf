#![allow(clippy::needless_range_loop)]

//! Acceptance suite: one test per shipping criterion. Each test prints a
//! `[acceptance] C<n> ...: PASS` line (visible with `--nocapture`) and
//! enforces its runtime budget.
//!
//! Thresholds and fixed seeds were confirmed by oracle runs before the
//! implementations were frozen; every randomized check is deterministic.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dtg_cli::artifacts::FusionReportFile;
use dtg_cli::synth::{apply_map, chain_data, ChainSpec, MAP_AB, MAP_BC};
use dtg_core::entity_graph::{
    build_entity_graph, correlation, fit_regressors, select_method, significance,
    CorrelationMethod, EntityGraph, FeatureSeries, GraphBuildConfig,
};
use dtg_core::g2g::{
    adapt_pair, adjacency_from_graph, adjacency_from_weights, encode_with, feature_loss,
    grad_total_loss, sparsity_weight, topology_loss, total_loss, AdaptationRecord, ModelMeta,
    TrainConfig, TrainPair,
};
use dtg_core::gaen::{
    discriminator_grads, discriminator_loss, generator_grads, generator_loss, Discriminator,
    Generator,
};
use dtg_core::numerics::{
    finite_diff_grad, grads_close, random_normal, random_uniform, xavier_uniform, SeededRng,
};
use dtg_core::simulation::{
    apply_structural_change, obtain_arc_model, DtgDatabase, ScenarioEvent, SystemGraph, TrainBudget,
};
use dtg_core::{Mat, Real};

const DTG: &str = env!("CARGO_BIN_EXE_dtg");

fn pass(name: &str) {
    println!("[acceptance] {name}: PASS");
}

fn budget(name: &str, started: Instant, limit: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= limit,
        "{name} exceeded its runtime budget: {elapsed:?} > {limit:?}"
    );
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "dtg-accept-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn random_symmetric(rng: &mut SeededRng, n: usize) -> Mat {
    let mut m = Mat::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.uniform(-1.0, 1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// C1: gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn c1_gradient_correctness() {
    let started = Instant::now();

    // Target-decode loss across seeds, depths, orders, and windows. Inputs
    // and weights are scaled so Z Z^T stays far from the probability-clamp
    // boundaries, where the loss is non-differentiable and the central
    // difference itself would be invalid.
    for seed in 0..5u64 {
        for hidden_layers in 0..3usize {
            for &n in &[3usize, 5] {
                for &t in &[4usize, 8] {
                    let mut rng = SeededRng::new(9_000 + seed * 101 + (hidden_layers as u64));
                    let a = adjacency_from_weights(&random_symmetric(&mut rng, n), 0.3).unwrap();
                    let a_target =
                        adjacency_from_weights(&random_symmetric(&mut rng, n), 0.3).unwrap();
                    let x: Mat = random_uniform(&mut rng, n, t, -0.3, 0.3);
                    let x_target: Mat = random_uniform(&mut rng, n, t, -0.3, 0.3);
                    let mut dims = vec![t];
                    dims.extend(std::iter::repeat_n(t, hidden_layers));
                    dims.push(t);
                    let weights: Vec<Mat> = dims
                        .windows(2)
                        .map(|w| xavier_uniform::<Real>(&mut rng, w[0], w[1]).scale(0.5))
                        .collect();
                    let (_, analytic) =
                        grad_total_loss(&weights, &a, &x, &a_target, &x_target, 1.0).unwrap();
                    let numeric = finite_diff_grad(
                        |params| {
                            let z = encode_with(params, &a, &x).unwrap();
                            let p = z.matmul(&z.transpose()).unwrap().sigmoid();
                            total_loss(&p, &z, &a_target, &x_target, 1.0).unwrap()
                        },
                        &weights,
                        1e-5,
                    );
                    assert!(
                        grads_close(&analytic, &numeric, 1e-4),
                        "target-decode gradients diverge: seed {seed} layers {hidden_layers} n {n} t {t}"
                    );
                }
            }
        }
    }

    // Both GAN losses on small networks.
    for seed in 0..5u64 {
        let mut rng = SeededRng::new(17_000 + seed);
        let dim = 3;
        let gen = Generator::init(dim, &mut rng);
        let disc = Discriminator::init(dim, &mut rng);
        let noise: Mat = random_normal(&mut rng, 5, dim, 0.0, 1.0);
        let real: Mat = random_normal(&mut rng, 5, dim, 1.0, 0.5);
        let fake = gen.net.forward(&noise).unwrap();

        let analytic = discriminator_grads(&disc, &real, &fake).unwrap();
        let numeric = finite_diff_grad(
            |params| {
                let mut net = disc.net.clone();
                net.params_mut().clone_from(&params.to_vec());
                discriminator_loss(&Discriminator { net }, &real, &fake).unwrap()
            },
            disc.net.params(),
            1e-5,
        );
        assert!(
            grads_close(&analytic, &numeric, 1e-4),
            "discriminator gradients diverge at seed {seed}"
        );

        let analytic = generator_grads(&gen, &disc, &noise).unwrap();
        let numeric = finite_diff_grad(
            |params| {
                let mut net = gen.net.clone();
                net.params_mut().clone_from(&params.to_vec());
                generator_loss(&Generator { net }, &disc, &noise).unwrap()
            },
            gen.net.params(),
            1e-5,
        );
        assert!(
            grads_close(&analytic, &numeric, 1e-4),
            "generator gradients diverge at seed {seed}"
        );
    }

    budget("C1", started, Duration::from_secs(10));
    pass("C1 gradient correctness (target-decode + both GAN losses)");
}

// ---------------------------------------------------------------------------
// C2: loss formula fidelity
// ---------------------------------------------------------------------------

#[test]
fn c2_loss_formula_fidelity() {
    let started = Instant::now();

    // Sparsity weight on every off-diagonal pattern, N <= 4.
    for n in 2..=4usize {
        let off_diag = n * n - n;
        let mut symmetric_patterns = 0usize;
        for bits in 0..(1u32 << off_diag) {
            let mut a = Mat::identity(n);
            let mut k = 0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        if bits >> k & 1 == 1 {
                            a.set(i, j, 1.0);
                        }
                        k += 1;
                    }
                }
            }
            // Independent counting oracle.
            let ones = a.values().iter().filter(|&&v| v == 1.0).count();
            let expected = (n * n - ones) as Real / (n * n) as Real;
            assert_eq!(sparsity_weight(&a), expected, "n {n} bits {bits:b}");
            let is_symmetric = (0..n).all(|i| (0..n).all(|j| a.get(i, j) == a.get(j, i)));
            if is_symmetric {
                symmetric_patterns += 1;
            }
        }
        // Symmetric off-diagonal patterns are determined by the unordered
        // pairs: 2^(n(n-1)/2) of them.
        assert_eq!(symmetric_patterns, 1 << (n * (n - 1) / 2));
    }

    // Topology loss vanishes as P approaches the target at the clamp bounds.
    let mut rng = SeededRng::new(2_020);
    for _ in 0..10 {
        let a = adjacency_from_weights(&random_symmetric(&mut rng, 4), 0.3).unwrap();
        let p = a.map(|v| if v > 0.5 { 1.0 - 1e-12 } else { 1e-12 });
        let loss = topology_loss(&p, &a).unwrap();
        assert!((0.0..1e-9).contains(&loss), "loss {loss}");
    }

    // Feature loss is zero iff the matrices are equal.
    for seed in 0..10u64 {
        let mut rng = SeededRng::new(2_100 + seed);
        let x: Mat = random_uniform(&mut rng, 3, 5, -2.0, 2.0);
        assert_eq!(feature_loss(&x, &x).unwrap(), 0.0);
        let mut y = x.clone();
        let r = rng.next_index(3);
        let c = rng.next_index(5);
        y.set(r, c, y.get(r, c) + 0.5);
        assert!(feature_loss(&y, &x).unwrap() > 0.0);
    }

    budget("C2", started, Duration::from_secs(5));
    pass("C2 loss formula fidelity (sparsity weight, clamp limits, feature norm)");
}

// ---------------------------------------------------------------------------
// C3: pseudo-feature isolation
// ---------------------------------------------------------------------------

#[test]
fn c3_pseudo_feature_isolation() {
    let started = Instant::now();
    for seed in 0..20u64 {
        let mut rng = SeededRng::new(3_300 + seed);
        let n_s = 2 + (seed % 3) as usize;
        let n_t = n_s + 1 + (seed % 2) as usize;
        let t = 4;
        let mk = |rng: &mut SeededRng, ty: &str, n: usize| EntityGraph {
            entity_id: format!("{ty}-x"),
            entity_type: ty.to_string(),
            nodes: (0..n)
                .map(|i| {
                    FeatureSeries::new(
                        format!("f{i}"),
                        (0..t).map(|_| rng.uniform(-2.0, 2.0)).collect(),
                    )
                    .unwrap()
                })
                .collect(),
            arc_weights: random_symmetric(rng, n),
            correlation_method: CorrelationMethod::Pearson,
        };
        let source = mk(&mut rng, "src", n_s);
        let target = mk(&mut rng, "tgt", n_t);
        let adapted = adapt_pair(&source, &target, seed).unwrap();
        assert!(matches!(adapted.record, AdaptationRecord::Padded { .. }));

        let weights = vec![
            xavier_uniform::<Real>(&mut rng, t, t),
            xavier_uniform::<Real>(&mut rng, t, t),
        ];
        let z_raw = encode_with(
            &weights,
            &adjacency_from_graph(&source, 0.3).unwrap(),
            &source.feature_matrix(),
        )
        .unwrap();
        let z_padded = encode_with(
            &weights,
            &adjacency_from_weights(&adapted.weights, 0.3).unwrap(),
            &adapted.features,
        )
        .unwrap();
        for r in 0..n_s {
            for c in 0..t {
                assert_eq!(
                    z_raw.get(r, c).to_bits(),
                    z_padded.get(r, c).to_bits(),
                    "instance {seed}, row {r}, col {c}"
                );
            }
        }
    }
    budget("C3", started, Duration::from_secs(5));
    pass("C3 pseudo-feature isolation (20 instances, bitwise)");
}

// ---------------------------------------------------------------------------
// C4: identity-G2G learnability
// ---------------------------------------------------------------------------

/// The committed identity instance: two tightly correlated positive-mean
/// features plus an independent negative-mean one, so the thresholded
/// adjacency is exactly representable by the dot-product decoder.
fn identity_instance(seed: u64, t: usize) -> (Mat, Mat) {
    let mut rng = SeededRng::new(seed);
    let f0: Vec<Real> = (0..t).map(|_| 2.0 + rng.uniform(-0.6, 0.6)).collect();
    let f1: Vec<Real> = f0.iter().map(|v| v + rng.uniform(-0.15, 0.15)).collect();
    let f2: Vec<Real> = (0..t).map(|_| -2.0 + rng.uniform(-0.6, 0.6)).collect();
    let build = build_entity_graph(
        "idtask",
        "idtask-type",
        vec![
            FeatureSeries::new("f0", f0).unwrap(),
            FeatureSeries::new("f1", f1).unwrap(),
            FeatureSeries::new("f2", f2).unwrap(),
        ],
        &GraphBuildConfig::default(),
    )
    .unwrap();
    let a = adjacency_from_graph(&build.graph, 0.3).unwrap();
    (a, build.graph.feature_matrix())
}

#[test]
fn c4_identity_g2g_learnability() {
    let started = Instant::now();
    // Fixed-seed oracle run committed with the repo: instance 7002,
    // training seed 2, library defaults (lr 0.01, momentum 0.9, clip 10).
    let (a, x) = identity_instance(7002, 8);
    // The instance has the mixed topology the oracle run was built on.
    assert_eq!(a.get(0, 1), 1.0);
    assert_eq!(a.get(0, 2), 0.0);

    let pair = TrainPair {
        x_source: x.clone(),
        a_source: a.clone(),
        x_target: x.clone(),
        a_target: a.clone(),
    };
    let mut config = TrainConfig::new(8);
    config.epochs = 500;
    config.seed = 2;
    let meta = ModelMeta {
        source_type: "idtask-type".into(),
        target_type: "idtask-type".into(),
        adaptation: AdaptationRecord::None,
    };
    let (model, report) = dtg_core::g2g::train_g2g(meta, &[pair], &config).unwrap();

    let ratio = report.final_loss / report.initial_loss;
    assert!(
        ratio < 0.10,
        "loss ratio {ratio} (initial {}, final {})",
        report.initial_loss,
        report.final_loss
    );
    let out = model.apply(&x).unwrap();
    assert_eq!(out.adjacency, a, "decoded topology differs from target");
    let rel = out.features.sub(&x).unwrap().frobenius_norm() / x.frobenius_norm();
    assert!(rel < 0.2, "feature reconstruction error {rel}");

    budget("C4", started, Duration::from_secs(30));
    pass("C4 identity-G2G learnability (loss ratio < 10%, exact decoded topology)");
}

// ---------------------------------------------------------------------------
// C5: end-to-end synthetic-physics oracle
// ---------------------------------------------------------------------------

fn repo_demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

fn copy_demo(to: &Path) {
    let from = repo_demo_dir();
    std::fs::create_dir_all(to.join("data")).unwrap();
    for file in ["config.json", "topology.json", "scenario.json"] {
        std::fs::copy(from.join(file), to.join(file)).unwrap();
    }
    for file in ["head.csv", "mid.csv", "tail.csv"] {
        std::fs::copy(from.join("data").join(file), to.join("data").join(file)).unwrap();
    }
}

fn run_dtg(args: &[&str]) -> (bool, String) {
    let output = Command::new(DTG).args(args).output().expect("spawn dtg");
    (
        output.status.success(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
    )
}

fn run_pipeline(dir: &Path) {
    let config = dir.join("config.json");
    let topology = dir.join("topology.json");
    for step in [vec!["build-entity"], vec!["train-g2g"]] {
        let mut args: Vec<&str> = step;
        let config_s = config.to_str().unwrap().to_string();
        let topo_s = topology.to_str().unwrap().to_string();
        args.extend_from_slice(&["--config", &config_s, "--topology", &topo_s]);
        let (ok, out) = run_dtg(&args);
        assert!(ok, "{args:?} failed: {out}");
    }
    let system = dir.join("out/system.json");
    let scenario = dir.join("scenario.json");
    let (ok, out) = run_dtg(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--system",
        system.to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
    ]);
    assert!(ok, "simulate failed: {out}");
}

#[test]
fn c5_end_to_end_synthetic_physics() {
    let started = Instant::now();
    let dir = temp_dir("c5");
    copy_demo(&dir);
    run_pipeline(&dir);

    // Ground-truth linear response to the 15% head perturbation.
    let spec = ChainSpec::default();
    let data = chain_data(&spec);
    let window = 8;
    let len = spec.len;
    let mut truth_tail = vec![vec![0.0; window]; 3];
    for (w, i) in (len - window..len).enumerate() {
        let head = [
            data.head[0][i] * 1.15,
            data.head[1][i] * 1.15,
            data.head[2][i] * 1.15,
        ];
        let mid = apply_map(&MAP_AB, &head);
        let tail = apply_map(&MAP_BC, &mid);
        for f in 0..3 {
            truth_tail[f][w] = tail[f];
        }
    }
    let mut truth_mid = vec![vec![0.0; window]; 3];
    for (w, i) in (len - window..len).enumerate() {
        let head = [
            data.head[0][i] * 1.15,
            data.head[1][i] * 1.15,
            data.head[2][i] * 1.15,
        ];
        let mid = apply_map(&MAP_AB, &head);
        for f in 0..3 {
            truth_mid[f][w] = mid[f];
        }
    }
    let state: BTreeMap<String, Mat> =
        serde_json::from_slice(&std::fs::read(dir.join("out/final_state.json")).unwrap()).unwrap();
    let rel_error = |got: &Mat, want: &[Vec<Real>]| {
        let mut num = 0.0;
        let mut den = 0.0;
        for f in 0..3 {
            for w in 0..window {
                num += (got.get(f, w) - want[f][w]).powi(2);
                den += want[f][w].powi(2);
            }
        }
        (num / den).sqrt()
    };
    let rel_mid = rel_error(&state["mid"], &truth_mid);
    let rel = rel_error(&state["tail"], &truth_tail);
    assert!(rel_mid < 0.10, "mid response error {rel_mid}");
    assert!(rel < 0.10, "tail response error {rel}");

    std::fs::remove_dir_all(&dir).ok();
    budget("C5", started, Duration::from_secs(120));
    pass("C5 end-to-end synthetic-physics oracle (tail within 10% of linear response)");
}

// ---------------------------------------------------------------------------
// C6: propagation bounds
// ---------------------------------------------------------------------------

fn accept_entity(
    id: &str,
    entity_type: &str,
    seed: u64,
) -> (EntityGraph, Vec<dtg_core::entity_graph::FeatureRegressor>) {
    let mut rng = SeededRng::new(seed);
    let len = 60;
    let latent: Vec<Real> = (0..len)
        .map(|i| 3.0 + (i as Real * 0.17).sin() + rng.uniform(-0.05, 0.05))
        .collect();
    let f0 = latent.clone();
    let f1: Vec<Real> = latent
        .iter()
        .map(|v| 0.8 * v + 0.1 + rng.uniform(-0.03, 0.03))
        .collect();
    let f2: Vec<Real> = (0..len)
        .map(|i| -2.0 - 0.4 * (i as Real * 0.11).cos() + rng.uniform(-0.05, 0.05))
        .collect();
    let build = build_entity_graph(
        id,
        entity_type,
        vec![
            FeatureSeries::new("f0", f0).unwrap(),
            FeatureSeries::new("f1", f1).unwrap(),
            FeatureSeries::new("f2", f2).unwrap(),
        ],
        &GraphBuildConfig::default(),
    )
    .unwrap();
    let history = build.graph.feature_matrix().transpose();
    let regressors = fit_regressors(&build.graph, &history, 0.3, 1e-8).unwrap();
    (build.graph, regressors)
}

fn quick_budget(seed: u64) -> TrainBudget {
    let mut train = TrainConfig::new(6);
    train.epochs = 60;
    train.learning_rate = 0.005;
    train.momentum = 0.5;
    train.grad_clip = Some(1.0);
    train.seed = seed;
    TrainBudget {
        train,
        stride: 3,
        ridge: 1e-8,
        max_trains: None,
    }
}

#[test]
fn c6_propagation_bounds() {
    let started = Instant::now();
    // Acyclic 5-entity system: e0 -> e1 -> e2 -> e3 plus e1 -> e4.
    // Longest path has 3 arcs.
    let db = DtgDatabase::open(temp_dir("c6-db")).unwrap();
    let entities: Vec<_> = (0..5)
        .map(|i| {
            let (g, r) = accept_entity(&format!("e{i}"), &format!("t{i}"), 600 + i as u64);
            (g, r, None)
        })
        .collect();
    let mut system = SystemGraph::build(entities, Vec::new(), 6).unwrap();
    let budget_cfg = quick_budget(601);
    for (s, t) in [(0, 1), (1, 2), (2, 3), (1, 4)] {
        let (arc, _) = obtain_arc_model(
            &system,
            &db,
            &budget_cfg,
            &format!("e{s}"),
            &format!("e{t}"),
        )
        .unwrap();
        system
            .insert_arc(format!("e{s}"), format!("e{t}"), arc)
            .unwrap();
    }

    // Empty observation set: one iteration, state unchanged.
    let before = system.state();
    let trace = system.propagate(&BTreeMap::new(), 1e-4, 100).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.iterations, 1);
    assert_eq!(system.state(), before);

    // Perturb the root: depth + 1 = 4 iterations at most.
    let mut obs = BTreeMap::new();
    obs.insert(
        "e0".to_string(),
        system.entity("e0").unwrap().state.scale(1.1),
    );
    let trace = system.propagate(&obs, 1e-4, 100).unwrap();
    assert!(trace.converged);
    assert!(trace.iterations <= 4, "iterations {}", trace.iterations);

    budget("C6", started, Duration::from_secs(10));
    pass("C6 propagation bounds (acyclic depth+1, empty observation no-op)");
}

// ---------------------------------------------------------------------------
// C7: lazy training
// ---------------------------------------------------------------------------

#[test]
fn c7_lazy_training() {
    let started = Instant::now();
    let db = DtgDatabase::open(temp_dir("c7-db")).unwrap();
    let entities: Vec<_> = (0..3)
        .map(|i| {
            let (g, r) = accept_entity(&format!("e{i}"), &format!("t{i}"), 700 + i as u64);
            (g, r, None)
        })
        .collect();
    let mut system = SystemGraph::build(entities, Vec::new(), 6).unwrap();
    let budget_cfg = quick_budget(701);
    for (s, t) in [(0, 1), (1, 2)] {
        let (arc, report) = obtain_arc_model(
            &system,
            &db,
            &budget_cfg,
            &format!("e{s}"),
            &format!("e{t}"),
        )
        .unwrap();
        assert!(report.is_some(), "first training must be a cache miss");
        system
            .insert_arc(format!("e{s}"), format!("e{t}"), arc)
            .unwrap();
    }

    // A brand-new arc type trains exactly once.
    let add = ScenarioEvent::Rewire {
        add_arcs: vec![("e0".to_string(), "e2".to_string())],
        remove_arcs: vec![],
    };
    let report = apply_structural_change(&mut system, &add, &db, &budget_cfg).unwrap();
    assert_eq!(report.trained.len(), 1);
    assert!(report.cache_hits.is_empty());
    let signature = system.arc("e0", "e2").unwrap().signature.clone();
    let bytes_after_training = db.get_raw(&signature).unwrap().unwrap();

    // Removing and re-adding it causes zero training invocations and
    // returns the byte-identical record.
    let runs_before = system.training_runs;
    let remove = ScenarioEvent::Rewire {
        add_arcs: vec![],
        remove_arcs: vec![("e0".to_string(), "e2".to_string())],
    };
    apply_structural_change(&mut system, &remove, &db, &budget_cfg).unwrap();
    let re_add = ScenarioEvent::Rewire {
        add_arcs: vec![("e0".to_string(), "e2".to_string())],
        remove_arcs: vec![],
    };
    let report = apply_structural_change(&mut system, &re_add, &db, &budget_cfg).unwrap();
    assert_eq!(system.training_runs, runs_before, "training counter moved");
    assert!(report.trained.is_empty());
    assert_eq!(report.cache_hits, vec![signature.0.clone()]);
    assert_eq!(
        db.get_raw(&signature).unwrap().unwrap(),
        bytes_after_training,
        "retrieved record is not byte-identical"
    );

    budget("C7", started, Duration::from_secs(30));
    pass("C7 lazy training (zero retrains on re-add, byte-identical record)");
}

// ---------------------------------------------------------------------------
// C8: GAEN equilibrium
// ---------------------------------------------------------------------------

fn write_flat_project(dir: &Path, seed: u64) {
    std::fs::create_dir_all(dir.join("data")).unwrap();
    let mut csv = String::from("timestamp,f0,f1\n");
    for i in 0..40 {
        csv.push_str(&format!("{i},2.0,3.0\n"));
    }
    std::fs::write(dir.join("data/flat.csv"), csv).unwrap();
    std::fs::write(
        dir.join("topology.json"),
        r#"{"entities":[{"id":"flat","type":"flat-unit","data":"flat.csv"}],"arcs":[]}"#,
    )
    .unwrap();
    let config = serde_json::json!({
        "window": 8,
        "seed": seed,
        "fusion": {
            "noise_std": 0.1,
            "batch_size": 32,
            "max_epochs": 32000,
            "check_warmup": 18000,
            "check_interval": 25,
            "consecutive_checks": 5,
            "learning_rate": 0.005,
            "generator_lr": 0.001
        },
        "paths": {"data_dir": "data", "db_dir": "db", "output_dir": "out"}
    });
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_vec_pretty(&config).unwrap(),
    )
    .unwrap();
}

#[test]
fn c8_gaen_equilibrium() {
    let started = Instant::now();
    let dir = temp_dir("c8");
    // Fixed-seed oracle run committed with the repo: config seed 3.
    write_flat_project(&dir, 3);
    let config = dir.join("config.json");
    let (ok, out) = run_dtg(&[
        "build-entity",
        "--config",
        config.to_str().unwrap(),
        "--topology",
        dir.join("topology.json").to_str().unwrap(),
    ]);
    assert!(ok, "build-entity failed: {out}");

    let dkm = format!("{DTG} dkm-demo constant 2.0,3.0 --table 64");
    let (ok, out) = run_dtg(&[
        "fuse",
        "--config",
        config.to_str().unwrap(),
        "--entity",
        "flat",
        "--dkm",
        &dkm,
    ]);
    assert!(ok, "fuse failed: {out}");
    let summary: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(summary["converged"], true, "equilibrium stop did not fire");
    let accuracy = summary["final_accuracy"].as_f64().unwrap();
    assert!(
        (0.45..=0.55).contains(&accuracy),
        "stop accuracy {accuracy} outside the band"
    );

    // Generator mean within 5% of the constant, over fresh noise.
    let report: FusionReportFile =
        serde_json::from_slice(&std::fs::read(dir.join("out/fusion/flat.json")).unwrap()).unwrap();
    let mut rng = SeededRng::new(4242);
    let mut mean = [0.0f64; 2];
    let n = 512;
    for _ in 0..n {
        let noise: Vec<Real> = (0..2).map(|_| rng.normal(0.0, 0.1)).collect();
        let out = report.bundle.generator.predict(&noise).unwrap();
        mean[0] += out[0];
        mean[1] += out[1];
    }
    mean[0] /= n as Real;
    mean[1] /= n as Real;
    let c = [2.0, 3.0];
    let rel = ((mean[0] - c[0]).powi(2) + (mean[1] - c[1]).powi(2)).sqrt()
        / (c[0] * c[0] + c[1] * c[1]).sqrt();
    assert!(rel < 0.05, "generator mean off by {rel}");

    // Parameter economy, by direct count.
    let gen_params = summary["generator_param_count"].as_u64().unwrap();
    let ens_params = summary["ensemble_param_count"].as_u64().unwrap();
    assert!(
        gen_params < ens_params,
        "generator {gen_params} not below ensemble {ens_params}"
    );

    std::fs::remove_dir_all(&dir).ok();
    budget("C8", started, Duration::from_secs(60));
    pass("C8 GAEN equilibrium (band reached, mean within 5%, fewer parameters)");
}

// ---------------------------------------------------------------------------
// C9: determinism
// ---------------------------------------------------------------------------

fn collect_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_str()
                    .unwrap()
                    .to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn c9_determinism() {
    let started = Instant::now();

    // Full pipeline twice in fresh directories: byte-identical outputs.
    let mut snapshots = Vec::new();
    for run in 0..2 {
        let dir = temp_dir(&format!("c9-{run}"));
        copy_demo(&dir);
        run_pipeline(&dir);
        let mut files = collect_files(&dir.join("out"));
        files.extend(
            collect_files(&dir.join("db"))
                .into_iter()
                .map(|(k, v)| (format!("db/{k}"), v)),
        );
        snapshots.push(files);
        std::fs::remove_dir_all(&dir).ok();
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "file sets differ"
    );
    for (name, bytes) in a {
        assert_eq!(bytes, &b[name], "{name} differs between runs");
    }

    // Fusion twice: byte-identical bundle.
    let mut fusion_bytes = Vec::new();
    for run in 0..2 {
        let dir = temp_dir(&format!("c9f-{run}"));
        write_flat_project(&dir, 3);
        let config = dir.join("config.json");
        let (ok, _) = run_dtg(&[
            "build-entity",
            "--config",
            config.to_str().unwrap(),
            "--topology",
            dir.join("topology.json").to_str().unwrap(),
        ]);
        assert!(ok);
        let dkm = format!("{DTG} dkm-demo constant 2.0,3.0 --table 64");
        let (ok, _) = run_dtg(&[
            "fuse",
            "--config",
            config.to_str().unwrap(),
            "--entity",
            "flat",
            "--dkm",
            &dkm,
        ]);
        assert!(ok);
        fusion_bytes.push(std::fs::read(dir.join("out/fusion/flat.json")).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }
    assert_eq!(fusion_bytes[0], fusion_bytes[1], "fusion outputs differ");

    budget("C9", started, Duration::from_secs(120));
    pass("C9 determinism (byte-identical pipeline and fusion outputs)");
}

// ---------------------------------------------------------------------------
// C10: correlation and method selection
// ---------------------------------------------------------------------------

/// Simpson quadrature of the two-sided t tail, normalized with exact
/// half-integer gammas. Independent of the incomplete-beta path.
fn t_two_sided_quadrature(t: Real, dof: usize) -> Real {
    fn factorial(n: usize) -> Real {
        (1..=n).map(|v| v as Real).product()
    }
    fn gamma_half(twice: usize) -> Real {
        if twice.is_multiple_of(2) {
            factorial(twice / 2 - 1)
        } else {
            let n = twice / 2;
            factorial(2 * n) / (4f64.powi(n as i32) * factorial(n)) * std::f64::consts::PI.sqrt()
        }
    }
    let nu = dof as Real;
    let norm = gamma_half(dof + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(dof));
    let pdf = |x: Real| norm * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let a = t.abs();
    let b = a + 40.0;
    let steps = 80_000;
    let h = (b - a) / steps as Real;
    let mut acc = pdf(a) + pdf(b);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(a + i as Real * h);
    }
    2.0 * (acc * h / 3.0)
}

#[test]
fn c10_correlation_and_selection() {
    let started = Instant::now();

    // Pearson wins on linear data.
    let x: Vec<Real> = (0..24).map(|i| i as Real).collect();
    let linear = vec![
        FeatureSeries::new("a", x.clone()).unwrap(),
        FeatureSeries::new("b", x.iter().map(|v| 3.0 * v - 1.0).collect()).unwrap(),
        FeatureSeries::new("c", x.iter().map(|v| -0.25 * v + 2.0).collect()).unwrap(),
    ];
    let (method, report) = select_method(&linear).unwrap();
    assert_eq!(method, CorrelationMethod::Pearson);
    assert!((report.pearson.mean_confidence - 1.0).abs() < 1e-12);

    // Spearman confidence dominates Pearson on monotone cubic data.
    let mut rng = SeededRng::new(10_100);
    let base: Vec<Real> = (0..40).map(|i| (i as Real - 20.0) / 4.0).collect();
    let cubic = vec![
        FeatureSeries::new("x", base.clone()).unwrap(),
        FeatureSeries::new(
            "y",
            base.iter()
                .map(|v| v.powi(3) + rng.uniform(-0.5, 0.5))
                .collect(),
        )
        .unwrap(),
    ];
    let (_, report) = select_method(&cubic).unwrap();
    assert!(report.spearman.mean_confidence >= report.pearson.mean_confidence);

    // p-values match the integrated t-CDF oracle within 1e-6.
    for &(r, n) in &[
        (0.8, 20usize),
        (0.3, 12),
        (-0.62, 9),
        (0.95, 40),
        (0.05, 25),
    ] {
        let t = r * (((n - 2) as Real) / (1.0 - r * r)).sqrt();
        let oracle = t_two_sided_quadrature(t, n - 2);
        for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
            let got = significance(method, r, n);
            assert!(
                (got - oracle).abs() < 1e-6,
                "{method} p mismatch at r={r} n={n}: {got} vs {oracle}"
            );
        }
    }

    // The coefficient path agrees with a correlation of real series.
    let strong = correlation(CorrelationMethod::Pearson, &x, &x).unwrap();
    assert_eq!(strong, 1.0);

    budget("C10", started, Duration::from_secs(10));
    pass("C10 correlation and selection (method choice + quadrature-checked p-values)");
}
