use std::fs;

use nlhv::commands::{cmd_sweep, Overrides, RunContext};
use nlhv::config::parse_config;
use nlhv::io::{parse_scaling, SCALING_COLUMNS};

fn quick_sweep(out: &std::path::Path) -> RunContext {
    let doc = r#"{"model":{"d":2,"n":4,"mu":1.0,"omega":1.0},
        "integrator":{"mode":"langevin","steps":0},
        "ensemble":{"replicas":3,"master_seed":5},
        "sweep":{"t_scaled":[0.1],"n_list":[3,4],"burn_in_steps":500,"production_steps":1000,"record_every":10}}"#;
    let overrides = Overrides {
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    RunContext::new(parse_config(doc).unwrap(), &overrides).unwrap()
}

#[test]
fn scaling_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = quick_sweep(dir.path());
    let points = cmd_sweep(&ctx).unwrap();
    let text = fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, SCALING_COLUMNS.join(","));

    let rows = parse_scaling(&text).unwrap();
    assert_eq!(rows.len(), 2);
    for (row, p) in rows.iter().zip(&points) {
        assert_eq!(row.n, p.n);
        assert_eq!(row.temperature, p.temperature);
        assert_eq!(row.nu_hat, p.nu_hat);
        assert_eq!(row.nu_stderr, p.nu_stderr);
        assert_eq!(row.nu_pred, p.nu_pred);
        assert_eq!(row.hbar_emergent, p.hbar_emergent);
        assert_eq!(row.t_scaled, rows[0].t_scaled);
        assert!((row.t_scaled - 0.1).abs() < 1e-12);
    }
    assert!(dir.path().join("trend.json").exists());

    // reproducible from the same seed
    let again = tempfile::tempdir().unwrap();
    cmd_sweep(&quick_sweep(again.path())).unwrap();
    assert_eq!(
        fs::read(dir.path().join("scaling.csv")).unwrap(),
        fs::read(again.path().join("scaling.csv")).unwrap()
    );
}

#[test]
fn missing_sweep_section_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let doc = r#"{"model":{"d":2,"n":4,"mu":1.0,"omega":1.0},"integrator":{"mode":"microcanonical","steps":0}}"#;
    let ctx = RunContext::new(
        parse_config(doc).unwrap(),
        &Overrides {
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(cmd_sweep(&ctx).unwrap_err().exit_code(), 1);
}
