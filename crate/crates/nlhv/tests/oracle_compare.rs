use std::fs;
use std::path::Path;

use nlhv::commands::{cmd_compare, cmd_oracle, Overrides, RunContext};
use nlhv::config::parse_config;
use nlhv::io::{particles_csv, ParticlesHeader};
use nlhv_core::estimators::EigenTrajectory;
use nlhv_core::matrix::ModelParams;
use nlhv_core::quantum::{gaussian_packet, nelson_evolve, periodic_grid, Boundary, CoEvolvedDrift, NelsonEnsemble};

mod common;
use common::{nlhv, write};

fn context(out: &Path, oracle: &str) -> RunContext {
    let doc = format!(
        r#"{{"model":{{"d":2,"n":4,"mu":1.0,"omega":1.0}},"integrator":{{"mode":"microcanonical","steps":0}},
            "ensemble":{{"master_seed":3}},"oracle":{oracle}}}"#
    );
    RunContext::new(
        parse_config(&doc).unwrap(),
        &Overrides {
            out: Some(out.to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap()
}

const SMALL_ORACLE: &str = r#"{"grid_nodes":256,"length":40.0,"walkers":4000,"dt":0.005,"harmonic_time":2.0}"#;

#[test]
fn oracle_report_structure() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_oracle(&context(dir.path(), SMALL_ORACLE)).unwrap();
    assert!(report.harmonic.max_density_change < 1e-8);
    assert!(!report.harmonic.solver.accuracy_warning);
    assert_eq!(report.free_packet_widths.len(), 5);
    for row in &report.free_packet_widths {
        assert!(row.relative_error < 1e-4, "{row:?}");
    }
    assert!((report.free_packet_widths.last().unwrap().time - 2.0).abs() < 1e-9);
    let names: Vec<&str> = report.nelson.iter().map(|n| n.convention.as_str()).collect();
    assert_eq!(names, ["hbar_over_mu", "hbar_over_two_mu"]);
    assert_eq!(report.nelson[0].nu, 1.0);
    assert_eq!(report.nelson[1].nu, 0.5);
    assert!(report.reference("harmonic_ground").is_some());
    assert!(report.reference("free_packet").is_some());

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert!(json["nelson"].as_array().unwrap().len() == 2);
    assert!(json["free_packet_widths"][0]["sigma_analytic"].is_number());
}

#[test]
fn too_short_box_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_oracle(&context(dir.path(), r#"{"length":10.0,"grid_nodes":64}"#)).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

/// Walkers as a one-frame, one-replica "eigenvalue" file.
fn walker_file(dir: &Path, walkers: &[f64]) -> String {
    let header = ParticlesHeader {
        format: "nlhv-particles/1".into(),
        params: ModelParams::new(1, walkers.len(), 1.0, 1.0).with_kappa(1.0),
        temperature: None,
    };
    let traj = EigenTrajectory::from_positions(vec![2.0], walkers.len(), 1, walkers.to_vec(), 0).unwrap();
    write(dir, "particles.csv", &particles_csv(&header, &[traj]))
}

#[test]
fn nelson_walkers_as_eigenvalues_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path(), r#"{"walkers":2000,"harmonic_time":1.0}"#);
    cmd_oracle(&ctx).unwrap();

    // free packet at t = 2μσ²/ħ, independent of the oracle's own walkers
    let grid = periodic_grid(-20.0, 40.0, 512).unwrap();
    let psi = gaussian_packet(grid, 0.0, 1.0, 0.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let start = NelsonEnsemble::sample(&psi, 100_000, 1.0, 77);
    let mut drift = CoEvolvedDrift::with_substeps(psi, &vec![0.0; 512], 0.002, 40, 1.0).unwrap();
    let end = nelson_evolve(&start, &mut drift, 0.002, 1000, 78).unwrap();
    let particles = walker_file(dir.path(), &end.walkers);

    let oracle_path = dir.path().join("oracle.json");
    let report = cmd_compare(&ctx, Path::new(&particles), &oracle_path).unwrap();
    let free = report.distance("free_packet").unwrap();
    assert!(free.binned_l1 < 0.05, "{free:?}");
    assert!(free.l1 < 0.05, "{free:?}");
    let ground = report.distance("harmonic_ground").unwrap();
    assert!(ground.l1 > 0.2, "{ground:?}");
    assert!(report.diffusion.is_none());
    assert!(dir.path().join("compare.json").exists());
}

#[test]
fn self_distance_is_zero_and_missing_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(dir.path(), SMALL_ORACLE);
    let report = cmd_oracle(&ctx).unwrap();
    let rho = &report.reference("harmonic_ground").unwrap().rho;
    let grid = &report.grid;
    for metric in [
        nlhv_core::quantum::DensityMetric::L1,
        nlhv_core::quantum::DensityMetric::Ks,
    ] {
        assert_eq!(
            nlhv_core::quantum::compare_densities(grid, rho, rho, metric).unwrap(),
            0.0
        );
    }

    let oracle = dir.path().join("oracle.json");
    let missing = dir.path().join("missing.csv");
    let err = cmd_compare(&ctx, &missing, &oracle).unwrap_err();
    assert_eq!(err.exit_code(), 3);

    let cfg = write(dir.path(), "cfg.json", common::MINIMAL);
    let res = nlhv(&[
        "compare",
        "--config",
        &cfg,
        "--trajectory",
        missing.to_str().unwrap(),
        "--oracle",
        oracle.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
}
