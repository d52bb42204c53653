use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;
use rand::Rng as _;

use super::*;
use crate::estimators::Grid;
use crate::rng;
use crate::stats;

const PI: f64 = core::f64::consts::PI;

fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                .sum()
        })
        .collect()
}

#[test]
fn fft_matches_direct_transform() {
    let mut g = rng::from_seed(1);
    for n in [1usize, 2, 4, 8, 64] {
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(g.random(), g.random())).collect();
        let fft = Fft::new(n).unwrap();
        let mut y = x.clone();
        fft.forward(&mut y);
        for (a, b) in y.iter().zip(dft(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
        fft.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }
    assert!(Fft::new(12).is_err());
    assert!(Fft::new(0).is_err());
}

fn periodic(lower: f64, length: f64, n: usize) -> Grid {
    periodic_grid(lower, length, n).unwrap()
}

#[test]
fn harmonic_ground_state_is_stationary() {
    let (m, w, hbar) = (1.0, 1.0, 1.0);
    let grid = periodic(-10.0, 20.0, 128);
    let psi = harmonic_state(grid.clone(), 0, w, hbar, m, Boundary::Periodic).unwrap();
    let v = harmonic_potential(&grid, m, w);
    let steps = 20_000;
    let dt = 2.0 * PI / w / steps as f64;
    let (out, report) = evolve_schrodinger(&psi, &v, dt, steps).unwrap();
    assert!(!report.accuracy_warning, "{report:?}");
    let change = psi
        .density()
        .iter()
        .zip(out.density())
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(change < 1e-8, "max density change {change}");
    assert!(report.norm_drift < 1e-10);
}

#[test]
fn free_packet_width_follows_analytic_law() {
    let (m, hbar, sigma0) = (1.0, 1.0, 1.0);
    let grid = periodic(-20.0, 40.0, 512);
    let psi = gaussian_packet(grid.clone(), 0.0, sigma0, 0.0, hbar, m, Boundary::Periodic).unwrap();
    let v = vec![0.0; grid.len()];
    let t_end = 2.0 * m * sigma0 * sigma0 / hbar;
    let steps = 200;
    let (out, report) = evolve_schrodinger(&psi, &v, t_end / steps as f64, steps).unwrap();
    let (_, var) = out.moments();
    let expect = free_packet_width(sigma0, hbar, m, t_end);
    assert!((var.sqrt() / expect - 1.0).abs() < 1e-4);
    assert!((expect - 2.0f64.sqrt()).abs() < 1e-15);
    assert!(report.norm_drift < 1e-12);
}

#[test]
fn norm_is_preserved_over_many_steps() {
    let grid = periodic(-10.0, 20.0, 128);
    let psi = gaussian_packet(grid.clone(), 1.0, 0.7, 2.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let v = harmonic_potential(&grid, 1.0, 1.0);
    let (_, r) = evolve_schrodinger(&psi, &v, 1e-3, 10_000).unwrap();
    assert!(r.norm_drift < 1e-10, "{}", r.norm_drift);

    let dgrid = Grid::line(-10.0, 10.0, 401).unwrap();
    let psi = gaussian_packet(dgrid.clone(), 1.0, 0.7, 2.0, 1.0, 1.0, Boundary::Dirichlet).unwrap();
    let v = harmonic_potential(&dgrid, 1.0, 1.0);
    let (_, r) = evolve_schrodinger(&psi, &v, 1e-3, 10_000).unwrap();
    assert!(r.norm_drift < 1e-10, "{}", r.norm_drift);
}

#[test]
fn constant_potential_is_a_global_phase() {
    let c = 0.37;
    for (grid, boundary) in [
        (periodic(-10.0, 20.0, 128), Boundary::Periodic),
        (Grid::line(-10.0, 10.0, 201).unwrap(), Boundary::Dirichlet),
    ] {
        let psi = gaussian_packet(grid.clone(), 0.0, 0.8, 1.0, 1.0, 1.0, boundary).unwrap();
        let (dt, steps) = (1e-2, 150);
        let (free, _) = evolve_schrodinger(&psi, &vec![0.0; grid.len()], dt, steps).unwrap();
        let (shifted, _) = evolve_schrodinger(&psi, &vec![c; grid.len()], dt, steps).unwrap();
        let phase = Complex64::from_polar(1.0, -c * dt * steps as f64);
        for (a, b) in free.psi.iter().zip(&shifted.psi) {
            assert!((a * phase - b).norm() < 1e-10, "{boundary:?}");
        }
    }
}

fn analytic_free_packet(x: f64, t: f64, sigma0: f64, hbar: f64, m: f64) -> Complex64 {
    let a = Complex64::new(1.0, hbar * t / (2.0 * m * sigma0 * sigma0));
    let pre = (2.0 * PI * sigma0 * sigma0).powf(-0.25);
    pre / a.sqrt() * (-(x * x) / (4.0 * sigma0 * sigma0 * a)).exp()
}

#[test]
fn crank_nicolson_is_second_order() {
    let (sigma0, t_end) = (0.5, 0.5);
    let error = |nodes: usize, steps: u64| -> f64 {
        let grid = Grid::line(-8.0, 8.0, nodes).unwrap();
        let psi = gaussian_packet(grid.clone(), 0.0, sigma0, 0.0, 1.0, 1.0, Boundary::Dirichlet).unwrap();
        let (out, _) = evolve_schrodinger(&psi, &vec![0.0; nodes], t_end / steps as f64, steps).unwrap();
        let h = out.spacing();
        (0..nodes)
            .map(|i| (out.psi[i] - analytic_free_packet(out.x(i), t_end, sigma0, 1.0, 1.0)).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * h.sqrt()
    };
    let e: Vec<f64> = [(161, 25), (321, 50), (641, 100)]
        .iter()
        .map(|&(n, s)| error(n, s))
        .collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8 && order < 2.3, "errors {e:?}");
    }
}

#[test]
fn width_monitor_aborts_runaway_packet() {
    let grid = periodic(-5.0, 10.0, 64);
    let psi = gaussian_packet(grid.clone(), 0.0, 0.3, 0.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let err = evolve_schrodinger(&psi, &vec![0.0; 64], 0.01, 2000).unwrap_err();
    assert!(matches!(err, crate::Error::WidthExceeded { .. }));
}

#[test]
fn accuracy_warning_flag() {
    let grid = periodic(-10.0, 20.0, 256);
    let psi = gaussian_packet(grid.clone(), 0.0, 1.0, 0.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let (_, r) = evolve_schrodinger(&psi, &vec![0.0; 256], 0.05, 1).unwrap();
    assert!(r.accuracy_warning);
    let (_, r) = evolve_schrodinger(&psi, &vec![0.0; 256], 1e-4, 1).unwrap();
    assert!(!r.accuracy_warning);
}

#[test]
fn wavefunction_validation() {
    let grid = periodic(-1.0, 2.0, 12);
    let psi = vec![Complex64::new(1.0, 0.0); 12];
    assert!(WaveFunction::new(grid.clone(), psi.clone(), 1.0, 1.0, Boundary::Periodic).is_err());
    assert!(WaveFunction::new(grid.clone(), psi.clone(), 1.0, 1.0, Boundary::Dirichlet).is_ok());
    assert!(WaveFunction::new(
        grid.clone(),
        vec![Complex64::new(0.0, 0.0); 12],
        1.0,
        1.0,
        Boundary::Dirichlet
    )
    .is_err());
    assert!(WaveFunction::new(grid, psi, 0.0, 1.0, Boundary::Dirichlet).is_err());
}

// ---- Madelung ----

#[test]
fn real_positive_state_has_zero_phase() {
    let psi = harmonic_state(periodic(-8.0, 16.0, 128), 0, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let m = madelung_decompose(&psi, DEFAULT_DENSITY_FLOOR).unwrap();
    assert!(m.s.iter().all(|s| *s == 0.0));
    assert!(m.mask.iter().any(|x| !*x), "far tails fall below the floor");
}

#[test]
fn plane_wave_phase_is_linear() {
    let (length, n, hbar) = (10.0, 64, 0.7);
    let grid = periodic(0.0, length, n);
    let p = 2.0 * PI * 3.0 * hbar / length;
    let m = MadelungPair {
        grid: grid.clone(),
        rho: vec![1.0; n],
        s: (0..n).map(|i| p * i as f64 * length / n as f64).collect(),
        mask: vec![true; n],
        hbar,
        boundary: Boundary::Periodic,
    };
    let psi = build_wavefunction(&m, 1.0).unwrap();
    for (i, z) in psi.psi.iter().enumerate() {
        let x = psi.x(i);
        let expect = Complex64::from_polar(1.0 / length.sqrt(), p * x / hbar);
        assert!((z - expect).norm() < 1e-12);
    }
    let back = madelung_decompose(&psi, DEFAULT_DENSITY_FLOOR).unwrap();
    let xs: Vec<f64> = (0..n).map(|i| psi.x(i)).collect();
    let (_, slope) = stats::linear_fit(&xs, &back.s).unwrap();
    assert!((slope - p).abs() < 1e-10, "{slope} vs {p}");
}

#[test]
fn excited_state_node_is_masked() {
    let grid = periodic(-8.0, 16.0, 128);
    let psi = harmonic_state(grid, 1, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let node = (0..128).find(|i| psi.x(*i) == 0.0).unwrap();
    let m = madelung_decompose(&psi, DEFAULT_DENSITY_FLOOR).unwrap();
    assert!(!m.mask[node]);
    let left: Vec<f64> = (0..node).filter(|i| m.mask[*i]).map(|i| m.s[i]).collect();
    let right: Vec<f64> = (node + 1..128).filter(|i| m.mask[*i]).map(|i| m.s[i]).collect();
    assert!(left.windows(2).all(|w| w[0] == w[1]));
    assert!(right.windows(2).all(|w| w[0] == w[1]));
    assert!(((left[0] - right[0]).abs() - PI).abs() < 1e-12);
}

#[test]
fn madelung_round_trip() {
    let grid = periodic(-10.0, 20.0, 256);
    let psi = gaussian_packet(grid.clone(), 0.5, 1.2, 1.5, 1.0, 1.0, Boundary::Periodic).unwrap();
    let (psi, _) = evolve_schrodinger(&psi, &vec![0.0; 256], 0.01, 50).unwrap();
    let m = madelung_decompose(&psi, 1e-8).unwrap();
    let rebuilt = build_wavefunction(&m, 1.0).unwrap();
    let m2 = madelung_decompose(&rebuilt, 1e-8).unwrap();
    let offset =
        m2.s.iter()
            .zip(&m.s)
            .zip(&m.mask)
            .find(|(_, k)| **k)
            .map(|((a, b), _)| a - b)
            .unwrap();
    for i in 0..256 {
        if m.mask[i] && m2.mask[i] {
            assert!((m.rho[i] - m2.rho[i]).abs() < 1e-12);
            let d = m2.s[i] - m.s[i] - offset;
            let jumps = d / (2.0 * PI * m.hbar);
            assert!((jumps - jumps.round()).abs() < 1e-9);
        }
    }
}

#[test]
fn build_wavefunction_contract() {
    let grid = periodic(-6.0, 12.0, 64);
    let rho: Vec<f64> = (0..64).map(|i| (-(grid.point(i)[0].powi(2))).exp()).collect();
    let m = MadelungPair {
        grid: grid.clone(),
        rho: rho.clone(),
        s: vec![0.0; 64],
        mask: vec![true; 64],
        hbar: 1.0,
        boundary: Boundary::Periodic,
    };
    let psi = build_wavefunction(&m, 1.0).unwrap();
    assert!(psi.psi.iter().all(|z| z.im == 0.0 && z.re > 0.0));
    assert!((psi.norm() - 1.0).abs() < 1e-12);
    let mut bad = m.clone();
    bad.rho[3] = -1.0;
    assert!(build_wavefunction(&bad, 1.0).is_err());
    let zero = WaveFunction {
        psi: vec![Complex64::new(0.0, 0.0); 64],
        ..psi
    };
    assert!(madelung_decompose(&zero, DEFAULT_DENSITY_FLOOR).is_err());
}

// ---- phase renormalization ----

#[test]
fn phase_renormalization_properties() {
    let psi = gaussian_packet(periodic(-5.0, 10.0, 64), 0.0, 1.0, 0.5, 1.3, 1.0, Boundary::Periodic).unwrap();
    assert_eq!(phase_renormalize(&psi, 0.0, 4.0), psi);
    let r = phase_renormalize(&psi, 2.5, 1.7);
    for (a, b) in psi.density().iter().zip(r.density()) {
        assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
    }
    let two = phase_renormalize(&phase_renormalize(&psi, 0.4, 1.7), 1.1, 1.7);
    let one = phase_renormalize(&psi, 1.5, 1.7);
    for (a, b) in two.psi.iter().zip(&one.psi) {
        assert!((a - b).norm() < 1e-14);
    }
}

// ---- Nelson drift and walkers ----

#[test]
fn ground_state_drift_is_linear_restoring() {
    let (m, w, hbar) = (1.0, 1.3, 0.8);
    let psi = harmonic_state(periodic(-8.0, 16.0, 128), 0, w, hbar, m, Boundary::Periodic).unwrap();
    let drift = nelson_drift_from_psi(&psi, hbar / (2.0 * m)).unwrap();
    let mut checked = 0;
    for i in 0..128 {
        if drift.mask[i] {
            assert!((drift.b[i] + w * psi.x(i)).abs() < 1e-9, "x = {}", psi.x(i));
            checked += 1;
        }
    }
    assert!(checked > 40);
}

#[test]
fn plane_wave_drift_is_uniform() {
    let (length, n, hbar, mass) = (10.0, 64, 1.0, 2.0);
    let p = 2.0 * PI * 2.0 * hbar / length;
    let grid = periodic(0.0, length, n);
    let psi = WaveFunction::new(
        grid,
        (0..n)
            .map(|i| Complex64::from_polar(1.0, p * i as f64 * length / n as f64 / hbar))
            .collect(),
        hbar,
        mass,
        Boundary::Periodic,
    )
    .unwrap();
    let drift = nelson_drift_from_psi(&psi, 0.3).unwrap();
    assert!(drift.b.iter().all(|b| (b - p / mass).abs() < 1e-10));

    let real = harmonic_state(periodic(-5.0, 10.0, 64), 0, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let drift = nelson_drift_from_psi(&real, 0.0).unwrap();
    assert!(drift.b.iter().all(|b| *b == 0.0));
}

#[test]
fn ground_state_walkers_keep_the_stationary_variance() {
    let (m, w, hbar) = (1.0, 1.0, 1.0);
    let psi = harmonic_state(periodic(-8.0, 16.0, 256), 0, w, hbar, m, Boundary::Periodic).unwrap();
    let nu = hbar / (2.0 * m);
    let mut source = FrozenDrift(nelson_drift_from_psi(&psi, nu).unwrap());
    let start = NelsonEnsemble::sample(&psi, 10_000, nu, 3);
    let out = nelson_evolve(&start, &mut source, 1e-3, 10_000, 4).unwrap();
    let var = stats::variance(&out.walkers);
    let expect = hbar / (2.0 * m * w);
    let se = expect * (2.0 / out.walkers.len() as f64).sqrt();
    assert!((var - expect).abs() < 3.0 * se, "{var} vs {expect} ± {se}");
    assert!((out.time - 10.0).abs() < 1e-9);
}

#[test]
fn driftless_plane_wave_translates_walkers() {
    let (length, n, hbar, mass) = (40.0, 64, 1.0, 1.0);
    let p = 2.0 * PI * hbar / length;
    let psi = WaveFunction::new(
        periodic(-20.0, length, n),
        (0..n)
            .map(|i| Complex64::from_polar(1.0, p * (-20.0 + i as f64 * length / n as f64) / hbar))
            .collect(),
        hbar,
        mass,
        Boundary::Periodic,
    )
    .unwrap();
    let mut source = FrozenDrift(nelson_drift_from_psi(&psi, 0.0).unwrap());
    let start = NelsonEnsemble::new(vec![-1.0, 0.0, 2.5], 0.0);
    let out = nelson_evolve(&start, &mut source, 0.01, 100, 0).unwrap();
    for (a, b) in start.walkers.iter().zip(&out.walkers) {
        assert!((b - a - p / mass).abs() < 1e-10);
    }
    assert_eq!(out.reflections, 0);
}

#[test]
fn walkers_reflect_at_grid_edges() {
    let psi = harmonic_state(periodic(-2.0, 4.0, 64), 0, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let mut source = FrozenDrift(DriftField {
        grid: psi.grid.clone(),
        b: vec![5.0; 64],
        mask: vec![true; 64],
    });
    let out = nelson_evolve(&NelsonEnsemble::new(vec![1.5], 0.0), &mut source, 0.1, 3, 0).unwrap();
    assert!(out.reflections > 0);
    let hi = -2.0 + 63.0 * 4.0 / 64.0;
    assert!(out.walkers[0] <= hi && out.walkers[0] >= -2.0);
}

#[test]
fn nelson_evolve_is_deterministic() {
    let psi = harmonic_state(periodic(-8.0, 16.0, 128), 0, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let field = nelson_drift_from_psi(&psi, 0.5).unwrap();
    let start = NelsonEnsemble::sample(&psi, 100, 0.5, 9);
    let a = nelson_evolve(&start, &mut FrozenDrift(field.clone()), 1e-2, 50, 1).unwrap();
    let b = nelson_evolve(&start, &mut FrozenDrift(field), 1e-2, 50, 1).unwrap();
    assert_eq!(a, b);
}

/// Walkers co-evolved with a spreading free packet; returns the binned L1
/// distance to `|ψ(t)|²` at `t = 2 μ σ₀² / ħ`.
pub(crate) fn free_packet_cross_check(nu: f64, walkers: usize, seed: u64) -> f64 {
    let (m, hbar, sigma0) = (1.0, 1.0, 1.0);
    let grid = periodic(-20.0, 40.0, 512);
    let psi = gaussian_packet(grid.clone(), 0.0, sigma0, 0.0, hbar, m, Boundary::Periodic).unwrap();
    let t_end = 2.0 * m * sigma0 * sigma0 / hbar;
    let steps = 1000;
    let dt = t_end / steps as f64;
    let start = NelsonEnsemble::sample(&psi, walkers, nu, seed);
    let mut source = CoEvolvedDrift::new(psi, &vec![0.0; grid.len()], dt, nu).unwrap();
    let out = nelson_evolve(&start, &mut source, dt, steps, seed + 1).unwrap();
    samples_vs_density_l1(&out.walkers, &grid, &source.psi.density(), 8).unwrap()
}

#[test]
fn free_packet_walkers_track_the_wavefunction() {
    for nu in [
        NuConvention::HbarOverTwoMu.nu(1.0, 1.0),
        NuConvention::HbarOverMu.nu(1.0, 1.0),
    ] {
        let l1 = free_packet_cross_check(nu, 100_000, 17);
        assert!(l1 < 0.05, "nu = {nu}: L1 = {l1}");
    }
}

#[test]
fn ground_state_walkers_match_density() {
    let psi = harmonic_state(periodic(-8.0, 16.0, 256), 0, 1.0, 1.0, 1.0, Boundary::Periodic).unwrap();
    let nu = 0.5;
    let mut source = FrozenDrift(nelson_drift_from_psi(&psi, nu).unwrap());
    let start = NelsonEnsemble::sample(&psi, 100_000, nu, 5);
    let out = nelson_evolve(&start, &mut source, 2e-3, 2000, 6).unwrap();
    let l1 = samples_vs_density_l1(&out.walkers, &psi.grid, &psi.density(), 8).unwrap();
    assert!(l1 < 0.05, "L1 = {l1}");
}

// ---- density comparison ----

#[test]
fn density_distances() {
    let grid = Grid::line(-10.0, 10.0, 20_001).unwrap();
    let pdf = |mu: f64| -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let z = grid.point(i)[0] - mu;
                (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
            })
            .collect()
    };
    let a = pdf(0.0);
    assert_eq!(compare_densities(&grid, &a, &a, DensityMetric::L1).unwrap(), 0.0);
    assert_eq!(compare_densities(&grid, &a, &a, DensityMetric::Ks).unwrap(), 0.0);
    let ks = compare_densities(&grid, &a, &pdf(0.1), DensityMetric::Ks).unwrap();
    let exact = 2.0 * stats::normal_cdf(0.05) - 1.0;
    assert!((ks - exact).abs() < 1e-6);
    assert!((ks - 0.0399).abs() < 5e-5);

    let g = Grid::line(0.0, 3.0, 4).unwrap();
    let l1 = compare_densities(&g, &[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], DensityMetric::L1).unwrap();
    assert_eq!(l1, 2.0);
    assert!(compare_densities(&g, &[1.0], &[1.0], DensityMetric::L1).is_err());
    let g2 = Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap();
    assert!(compare_densities(&g2, &[0.25; 4], &[0.25; 4], DensityMetric::Ks).is_err());
}

#[test]
fn histogram_of_uniform_samples() {
    let grid = Grid::line(0.5, 9.5, 10).unwrap();
    let samples: Vec<f64> = (0..1000).map(|i| i as f64 / 100.0).collect();
    let bins = Bins::coarsening(&grid, 2).unwrap();
    let h = histogram_density(&samples, &bins);
    assert_eq!(h.len(), 5);
    assert!(h.iter().all(|v| (v - 0.1).abs() < 1e-12));
}

#[test]
fn nu_conventions() {
    assert_eq!(NuConvention::HbarOverMu.nu(1.0, 2.0), 0.5);
    assert_eq!(NuConvention::HbarOverTwoMu.nu(1.0, 2.0), 0.25);
}
