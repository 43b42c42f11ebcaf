//! External-DKM protocol: registration probes, prediction round-trips, and
//! failure handling against the reference DKM executable.

use std::time::Duration;

use dtg_core::entity_graph::FeatureRegressor;
use dtg_core::gaen::*;

const DEMO: &str = env!("CARGO_BIN_EXE_dtg-dkm-demo");

fn demo(mode_args: &str) -> String {
    format!("{DEMO} {mode_args}")
}

#[test]
fn echo_predictor_round_trips() {
    let mut handle = register_dkm(&demo("identity 3"), 1.0, 3, DEFAULT_TIMEOUT).unwrap();
    assert_eq!(handle.kind, PredictorKind::ExternalDkm);
    assert_eq!(handle.dim, 3);
    let out = handle.predict(&[0.25, -1.5, 3.0]).unwrap();
    assert_eq!(out, vec![0.25, -1.5, 3.0]);
    // Floats survive the JSON hop bit-exactly.
    let tricky = [0.1, 1.0 / 3.0, f64::MIN_POSITIVE];
    let out = handle.predict(&tricky).unwrap();
    for (a, b) in out.iter().zip(&tricky) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn wrong_probe_dimension_is_rejected() {
    let err = register_dkm(&demo("identity 4"), 1.0, 3, DEFAULT_TIMEOUT).unwrap_err();
    assert!(matches!(err, GaenError::DimMismatch { .. }), "{err}");
}

#[test]
fn wrong_output_dimension_fails_prediction() {
    // broken-dim declares dim correctly but answers with dim+1 values.
    let mut handle = register_dkm(&demo("broken-dim 2"), 1.0, 2, DEFAULT_TIMEOUT).unwrap();
    let err = handle.predict(&[1.0, 2.0]).unwrap_err();
    assert!(matches!(err, GaenError::DimMismatch { .. }), "{err}");
}

#[test]
fn zero_trust_weight_is_rejected_before_launch() {
    let err = register_dkm("/does/not/matter", 0.0, 2, DEFAULT_TIMEOUT).unwrap_err();
    assert!(matches!(err, GaenError::BadTrustWeight { .. }));
}

#[test]
fn malformed_responder_is_rejected() {
    // `cat` echoes the probe request itself, which lacks `outputs`.
    let err = register_dkm("/bin/cat", 1.0, 2, DEFAULT_TIMEOUT).unwrap_err();
    assert!(matches!(err, GaenError::Malformed { .. }), "{err}");
}

#[test]
fn silent_predictor_times_out() {
    let err = register_dkm("/bin/sleep 30", 1.0, 2, Duration::from_millis(200)).unwrap_err();
    assert!(matches!(err, GaenError::Timeout { .. }), "{err}");
}

#[test]
fn missing_executable_fails_to_spawn() {
    let err = register_dkm("/no/such/dkm-binary", 1.0, 2, DEFAULT_TIMEOUT).unwrap_err();
    assert!(matches!(err, GaenError::Spawn { .. }));
}

#[test]
fn constant_mode_declares_its_table_size() {
    let mut handle = register_dkm(
        &demo("constant 2.5,-1.5 --table 50"),
        2.0,
        2,
        DEFAULT_TIMEOUT,
    )
    .unwrap();
    assert_eq!(handle.param_count, 100);
    assert_eq!(handle.predict(&[9.0, 9.0]).unwrap(), vec![2.5, -1.5]);
}

#[test]
fn affine_mode_applies_scale_and_offset() {
    let mut handle = register_dkm(&demo("affine 2 0.5 1.0"), 1.0, 2, DEFAULT_TIMEOUT).unwrap();
    assert_eq!(handle.predict(&[2.0, 4.0]).unwrap(), vec![2.0, 3.0]);
}

#[test]
fn mixed_ensemble_averages_internal_and_external_members() {
    let internal = PredictorHandle::internal(
        vec![
            FeatureRegressor {
                target: 0,
                neighbors: vec![],
                coefficients: vec![],
                intercept: 1.0,
                ridge: 0.0,
            },
            FeatureRegressor {
                target: 1,
                neighbors: vec![],
                coefficients: vec![],
                intercept: 5.0,
                ridge: 0.0,
            },
        ],
        1.0,
    )
    .unwrap();
    let external = register_dkm(&demo("constant 3.0,7.0"), 1.0, 2, DEFAULT_TIMEOUT).unwrap();
    let mut ensemble = EnsembleModel::new(vec![internal, external]).unwrap();
    assert_eq!(ensemble.predict(&[0.0, 0.0]).unwrap(), vec![2.0, 6.0]);
    // Effective parameter count sums member counts: 2 + 2*64 table entries.
    assert_eq!(ensemble.effective_param_count(), 2 + 128);
}

#[test]
fn distillation_through_a_dkm_subprocess_is_deterministic() {
    let run = || {
        let internal = PredictorHandle::internal(
            vec![FeatureRegressor {
                target: 0,
                neighbors: vec![],
                coefficients: vec![],
                intercept: 2.0,
                ridge: 0.0,
            }],
            1.0,
        )
        .unwrap();
        let external = register_dkm(&demo("constant 4.0"), 1.0, 1, DEFAULT_TIMEOUT).unwrap();
        let mut ensemble = EnsembleModel::new(vec![internal, external]).unwrap();
        let config = FusionConfig {
            max_epochs: 40,
            consecutive_checks: 1_000_000,
            seed: 11,
            ..FusionConfig::default()
        };
        distill(&mut ensemble, &config).unwrap()
    };
    let (g1, _) = run();
    let (g2, _) = run();
    for (a, b) in g1.net.params().iter().zip(g2.net.params()) {
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
