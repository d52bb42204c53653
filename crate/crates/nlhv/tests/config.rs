use nlhv::config::{parse_config, to_json, ConfigError};
use nlhv_core::dynamics::IntegratorMode;
use nlhv_core::quantum::NuConvention;

mod common;
use common::MINIMAL;

#[test]
fn minimal_document_gets_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.model.kappa, 0.0);
    assert_eq!(cfg.integrator.mode, IntegratorMode::Microcanonical);
    assert_eq!(cfg.integrator.dt, 1e-2);
    assert_eq!(cfg.ensemble.replicas, 1);
    assert_eq!(cfg.ensemble.master_seed, None);
    assert_eq!(cfg.initial.spread, 0.25);
    assert_eq!(cfg.analysis.grid_cells, 64);
    assert!(cfg.sweep.is_none());
    assert_eq!(cfg.oracle.grid_nodes, 512);
    assert_eq!(
        cfg.oracle.nu_conventions,
        vec![NuConvention::HbarOverMu, NuConvention::HbarOverTwoMu]
    );
    assert_eq!(cfg.output.dir, "out");
}

#[test]
fn sweep_with_one_direction_is_rejected() {
    let doc = r#"{"model":{"d":1,"n":3,"mu":1.0,"omega":1.0},
        "integrator":{"mode":"langevin","steps":0},
        "ensemble":{"replicas":4,"master_seed":1},
        "sweep":{"t_scaled":[0.1],"n_list":[4,8]}}"#;
    match parse_config(doc) {
        Err(ConfigError::Semantic { path, message }) => {
            assert_eq!(path, "sweep");
            assert!(message.contains("d >= 2"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn serialized_config_reparses_equal() {
    let doc = r#"{"model":{"d":3,"n":5,"mu":0.5,"omega":2.0,"kappa":0.1},
        "integrator":{"mode":"langevin","steps":100,"temperature":0.2,"gamma":0.5},
        "ensemble":{"replicas":2,"master_seed":9},
        "sweep":{"t_scaled":[0.05,0.1],"n_list":[4,8]}}"#;
    let cfg = parse_config(doc).unwrap();
    let again = parse_config(&to_json(&cfg)).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(to_json(&cfg), to_json(&again));
}

#[test]
fn unknown_keys_name_their_path() {
    let doc =
        r#"{"model":{"d":2,"n":3,"mu":1.0,"omega":1.0,"colour":1},"integrator":{"mode":"microcanonical","steps":1}}"#;
    match parse_config(doc) {
        Err(ConfigError::Semantic { path, message }) => {
            assert_eq!(path, "model.colour");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let doc = r#"{"model":{"d":2,"n":3,"mu":1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":1},"oracle":{"walker":5}}"#;
    assert!(matches!(parse_config(doc), Err(ConfigError::Semantic { path, .. }) if path == "oracle.walker"));
}

#[test]
fn syntax_errors_carry_position() {
    let doc = "{\n  \"model\": {\"d\": 2,,}\n}";
    match parse_config(doc) {
        Err(ConfigError::Syntax { line, column, .. }) => {
            assert_eq!(line, 2);
            assert!(column > 10, "{column}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn semantic_errors_name_fields() {
    let bad_mu = r#"{"model":{"d":2,"n":3,"mu":-1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":1}}"#;
    assert!(matches!(parse_config(bad_mu), Err(ConfigError::Semantic { path, .. }) if path == "model.mu"));
    let no_seed = r#"{"model":{"d":2,"n":3,"mu":1.0,"omega":1.0},"integrator":{"mode":"langevin","steps":1}}"#;
    assert!(matches!(parse_config(no_seed), Err(ConfigError::Semantic { path, .. }) if path == "ensemble.master_seed"));
    let grid = r#"{"model":{"d":2,"n":3,"mu":1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":1},"oracle":{"grid_nodes":300}}"#;
    assert!(matches!(parse_config(grid), Err(ConfigError::Semantic { path, .. }) if path == "oracle.grid_nodes"));
}

#[test]
fn manifest_config_is_accepted() {
    let cfg = parse_config(MINIMAL).unwrap();
    let manifest = format!(
        r#"{{"manifest_version":1,"command":"simulate","config":{}}}"#,
        to_json(&cfg)
    );
    assert_eq!(parse_config(&manifest).unwrap(), cfg);
}
