use super::*;
use crate::matrix::{potential_energy, random_config, MatrixConfiguration, ModelParams};
use crate::sym::SymMatrix;
use alloc::vec;

fn scalar_params(kappa: f64) -> ModelParams {
    ModelParams::new(1, 1, 1.0, 1.0).with_kappa(kappa)
}

#[test]
fn free_motion_is_linear_in_time() {
    let params = ModelParams::new(1, 4, 1.0, 1.0);
    let mut cfg = random_config(&params, 1.0, 1).unwrap();
    cfg.v = random_config(&params, 0.3, 2).unwrap().x;
    let x0 = cfg.clone();
    let dt = 0.01;
    let mut stepper = Integrator::new(&params, &cfg);
    for _ in 0..1000 {
        stepper.leapfrog(&mut cfg, dt);
    }
    let t = cfg.time;
    assert!((t - 10.0).abs() < 1e-10);
    for (x, (x_start, v)) in cfg.x[0]
        .packed()
        .iter()
        .zip(x0.x[0].packed().iter().zip(x0.v[0].packed()))
    {
        assert!((x - (x_start + v * t)).abs() < 1e-12);
    }
}

/// `U = κμω² X²` and `K = μ Ẋ²` give `Ẍ = −κω² X`, so `Ω = ω√κ`.
fn oscillator_error(dt: f64) -> f64 {
    let kappa = 2.0;
    let omega = 1.5;
    let params = ModelParams::new(1, 1, 0.7, omega).with_kappa(kappa);
    let big_omega = omega * kappa.sqrt();
    let mut cfg = MatrixConfiguration::zeros(&params);
    cfg.x[0].set(0, 0, 1.0);
    let mut stepper = Integrator::new(&params, &cfg);
    let t_end = 20.0;
    let steps = (t_end / dt).round() as usize;
    let mut worst = 0.0_f64;
    for _ in 0..steps {
        stepper.leapfrog(&mut cfg, dt);
        let exact = (big_omega * cfg.time).cos();
        worst = worst.max((cfg.x[0].get(0, 0) - exact).abs());
    }
    worst
}

#[test]
fn scalar_oscillator_frequency_and_order() {
    let e1 = oscillator_error(0.01);
    let e2 = oscillator_error(0.005);
    assert!(e1 < 1e-3, "error {e1}");
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn leapfrog_is_time_reversible() {
    let params = ModelParams::new(2, 4, 1.0, 1.0);
    let mut cfg = random_config(&params, 0.7, 9).unwrap();
    cfg.v = random_config(&params, 0.5, 10).unwrap().x;
    let start = cfg.clone();
    let n = 500;
    let dt = 1e-3;
    let mut stepper = Integrator::new(&params, &cfg);
    for _ in 0..n {
        stepper.leapfrog(&mut cfg, dt);
    }
    for v in &mut cfg.v {
        v.scale(-1.0);
    }
    for _ in 0..n {
        stepper.leapfrog(&mut cfg, dt);
    }
    let scale = start.x.iter().map(SymMatrix::max_abs).fold(0.0, f64::max);
    for (a, b) in cfg.x.iter().zip(&start.x) {
        for (x, y) in a.packed().iter().zip(b.packed()) {
            assert!((x - y).abs() < 1e-10 * n as f64 * scale);
        }
    }
}

#[test]
fn pure_step_functions_match_stepper() {
    let params = ModelParams::new(2, 3, 1.0, 1.0);
    let mut cfg = random_config(&params, 0.5, 4).unwrap();
    cfg.v = random_config(&params, 0.5, 5).unwrap().x;
    let a = step_leapfrog(&cfg, &params, 0.01);
    let mut b = cfg.clone();
    Integrator::new(&params, &cfg).leapfrog(&mut b, 0.01);
    assert_eq!(a, b);
    let mut r1 = rng::from_seed(3);
    let mut r2 = rng::from_seed(3);
    assert_eq!(
        step_langevin(&cfg, &params, 0.01, 0.5, 0.2, &mut r1),
        step_langevin(&cfg, &params, 0.01, 0.5, 0.2, &mut r2)
    );
}

#[test]
fn cold_commuting_state_stays_put_without_noise() {
    let params = ModelParams::new(2, 3, 1.0, 1.0);
    let cfg = MatrixConfiguration::from_positions(&params, &[vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]]).unwrap();
    let integ = IntegratorConfig::langevin(0.01, 2000, 0.5, 0.0, 1).with_record_every(500);
    let (_, end) = run_with_final(&cfg, &params, &integ).unwrap();
    assert_eq!(end.x, cfg.x);
    assert!(end.v.iter().all(|v| v.max_abs() == 0.0));
}

fn langevin_series(params: &ModelParams, t: f64, steps: u64, seed: u64) -> Vec<f64> {
    let mut cfg = MatrixConfiguration::zeros(params);
    let mut stepper = Integrator::new(params, &cfg);
    let mut r = rng::from_seed(seed);
    let mut out = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        stepper.baoab(&mut cfg, 0.05, 1.0, t, NoiseOptions::default(), &mut r);
        out.push(cfg.x[0].get(0, 0));
    }
    out
}

#[test]
fn scalar_gibbs_variance() {
    for (i, &t) in [0.1, 0.5].iter().enumerate() {
        let kappa = 1.0;
        let params = scalar_params(kappa);
        let xs = langevin_series(&params, t, 400_000, 11 + i as u64);
        let xs = &xs[1000..];
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let var = stats::mean(&sq);
        let se = stats::blocking_stderr(&sq).unwrap();
        // ∂²U/∂X² = 2κμω²
        let gibbs = t / (2.0 * kappa);
        assert!((var - gibbs).abs() < 3.0 * se, "T={t} var {var} gibbs {gibbs} se {se}");
    }
}

#[test]
fn langevin_is_deterministic_per_seed() {
    let params = ModelParams::new(2, 3, 1.0, 1.0);
    let cfg = random_config(&params, 0.5, 4).unwrap();
    let integ = IntegratorConfig::langevin(0.01, 300, 0.3, 0.2, 77)
        .with_record_every(10)
        .with_frame_every(1);
    let a = run(&cfg, &params, &integ).unwrap();
    let b = run(&cfg, &params, &integ).unwrap();
    assert_eq!(a, b);
    let mut other = integ;
    other.seed = 78;
    assert_ne!(a, run(&cfg, &params, &other).unwrap());
}

#[test]
fn zero_steps_records_initial_state() {
    let params = ModelParams::new(2, 3, 1.0, 1.0);
    let cfg = random_config(&params, 0.5, 4).unwrap();
    let rec = run(
        &cfg,
        &params,
        &IntegratorConfig::microcanonical(0.01, 0).with_frame_every(1),
    )
    .unwrap();
    assert_eq!(rec.len(), 1);
    assert_eq!(rec.times, vec![0.0]);
    assert_eq!(rec.energies[0].1, potential_energy(&cfg, &params).unwrap());
    assert!(rec.frames[0].is_some());
    assert!(rec.manifest.com_conserved);
}

#[test]
fn blow_up_aborts_with_step_index() {
    let params = ModelParams::new(2, 4, 1.0, 1.0);
    let mut cfg = random_config(&params, 2.0, 4).unwrap();
    cfg.v = random_config(&params, 1.0, 5).unwrap().x;
    let err = run(&cfg, &params, &IntegratorConfig::microcanonical(10.0, 1000)).unwrap_err();
    match err {
        Error::NumericAbort { step, .. } => assert!((1..1000).contains(&step)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_integrator_settings() {
    assert!(IntegratorConfig::microcanonical(0.0, 1).validate().is_err());
    assert!(IntegratorConfig::langevin(0.01, 1, 0.0, 1.0, 0).validate().is_err());
    assert!(IntegratorConfig::langevin(0.01, 1, 0.1, -1.0, 0).validate().is_err());
    assert!(IntegratorConfig::microcanonical(0.01, 1)
        .with_record_every(0)
        .validate()
        .is_err());
}

#[test]
fn com_momentum_conserved_only_without_bath() {
    let params = ModelParams::new(2, 4, 1.0, 1.0);
    let mut cfg = random_config(&params, 0.5, 4).unwrap();
    cfg.v = random_config(&params, 0.3, 6).unwrap().x;
    let rec = run(
        &cfg,
        &params,
        &IntegratorConfig::microcanonical(1e-3, 5000).with_record_every(100),
    )
    .unwrap();
    let p0 = &rec.com_momenta[0];
    for p in &rec.com_momenta {
        for (a, b) in p.iter().zip(p0) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    let lrec = run(
        &cfg,
        &params,
        &IntegratorConfig::langevin(1e-2, 5000, 0.5, 0.5, 3).with_record_every(100),
    )
    .unwrap();
    assert!(!lrec.manifest.com_conserved);
    let moved = lrec
        .com_momenta
        .last()
        .unwrap()
        .iter()
        .zip(p0)
        .any(|(a, b)| (a - b).abs() > 1e-3);
    assert!(moved);
}

#[test]
fn trace_projection_keeps_com_fixed() {
    let params = ModelParams::new(2, 4, 1.0, 1.0);
    let mut cfg = random_config(&params, 0.5, 4).unwrap();
    cfg.v = random_config(&params, 0.3, 6).unwrap().x;
    let mut integ = IntegratorConfig::langevin(1e-2, 3000, 0.5, 0.5, 3).with_record_every(100);
    integ.noise.project_trace = true;
    let rec = run(&cfg, &params, &integ).unwrap();
    let p0 = &rec.com_momenta[0];
    for p in &rec.com_momenta {
        for (a, b) in p.iter().zip(p0) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn off_diagonal_bath_leaves_diagonal_velocities_hamiltonian() {
    // d = 1 with κ = 0 has no force, so untouched diagonal velocities stay fixed
    let params = ModelParams::new(1, 3, 1.0, 1.0);
    let mut cfg = MatrixConfiguration::zeros(&params);
    cfg.v[0] = SymMatrix::from_diagonal(&[0.1, -0.2, 0.3]);
    let mut integ = IntegratorConfig::langevin(1e-2, 500, 1.0, 0.5, 3);
    integ.noise.thermalize = Thermalize::OffDiagonal;
    let (_, end) = run_with_final(&cfg, &params, &integ).unwrap();
    for i in 0..3 {
        assert_eq!(end.v[0].get(i, i), cfg.v[0].get(i, i));
    }
    assert!(end.v[0].get(0, 1) != 0.0);
}

#[test]
fn temperature_of_resting_and_synthetic_records() {
    let params = ModelParams::new(2, 3, 1.0, 1.0);
    let cfg = MatrixConfiguration::zeros(&params);
    let rec = run(&cfg, &params, &IntegratorConfig::microcanonical(0.01, 100)).unwrap();
    let est = measure_temperature(&rec, &params).unwrap();
    assert_eq!(est.temperature, 0.0);
    assert_eq!(est.stderr, 0.0);

    let mut synthetic = rec.clone();
    let dof = params.degrees_of_freedom() as f64;
    for e in &mut synthetic.energies {
        e.0 = 0.7 * dof / 2.0;
    }
    let est = measure_temperature(&synthetic, &params).unwrap();
    assert!((est.temperature - 0.7).abs() < 1e-13);

    let short = run(&cfg, &params, &IntegratorConfig::microcanonical(0.01, 10)).unwrap();
    assert!(matches!(
        measure_temperature(&short, &params),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn scalar_thermostat_self_consistency() {
    let params = scalar_params(1.0);
    let cfg = MatrixConfiguration::zeros(&params);
    let integ = IntegratorConfig::langevin(0.05, 200_000, 1.0, 0.5, 21);
    let rec = run(&cfg, &params, &integ).unwrap();
    let mut trimmed = rec.clone();
    trimmed.energies.drain(..1000);
    let est = measure_temperature(&trimmed, &params).unwrap();
    assert!((est.temperature - 0.5).abs() < 3.0 * est.stderr, "{est:?}");
}

#[test]
fn equilibration_paths() {
    let params = ModelParams::new(2, 4, 1.0, 1.0).with_kappa(0.5);
    let cold = MatrixConfiguration::zeros(&params);
    let integ = IntegratorConfig::langevin(0.02, 0, 1.0, 0.4, 5);

    let (same, diag) = equilibrate(&cold, &params, &integ, &EquilibrationSettings::new(f64::INFINITY, 10)).unwrap();
    assert_eq!(same, cold);
    assert_eq!(diag.total_steps, 0);

    let settings = EquilibrationSettings::new(0.04, 200_000);
    let (warm, diag) = equilibrate(&cold, &params, &integ, &settings).unwrap();
    assert!((diag.kinetic_temperature - 0.4).abs() <= 0.04);
    assert!(diag.window_steps >= settings.min_window);

    let again = IntegratorConfig { seed: 6, ..integ };
    let (_, diag2) = equilibrate(&warm, &params, &again, &settings).unwrap();
    assert!(diag2.burn_in_steps < settings.check_every, "{diag2:?}");

    let hopeless = IntegratorConfig {
        temperature: 5.0,
        ..integ
    };
    let err = equilibrate(&cold, &params, &hopeless, &EquilibrationSettings::new(1e-9, 2000)).unwrap_err();
    assert!(matches!(err, Error::NotConverged { .. }));

    let micro = IntegratorConfig::microcanonical(0.01, 10);
    assert!(equilibrate(&cold, &params, &micro, &settings).is_err());
}
