//! Synthetic estimator suite: every estimator against a process whose answer
//! is known in closed form.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diffusion::{estimate_diffusion, DiffusionOptions};
use super::grid::{FieldEstimate, Grid};
use super::residuals::{continuity_residual, irrotationality_residual};
use super::tracking::EigenTrajectory;
use super::velocity::estimate_current_velocity;
use crate::error::Result;
use crate::rng;

pub const BROWNIAN_TOLERANCE: f64 = 0.02;
pub const SLOPE_TOLERANCE: f64 = 0.05;
pub const MIN_CONTINUITY_ORDER: f64 = 1.8;
pub const IRROTATIONAL_LIMIT: f64 = 5e-2;
/// A rigid rotation must score at least this.
pub const ROTATION_FLAG: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCheck {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub seed: u64,
    pub checks: Vec<CalibrationCheck>,
    /// Continuity residuals on 41, 81, 161 and 321 nodes.
    pub continuity_residuals: Vec<f64>,
}

impl CalibrationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn normal(g: &mut rng::Rng) -> f64 {
    StandardNormal.sample(g)
}

fn gaussian_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * core::f64::consts::PI).sqrt())
}

/// `replicas` one-particle Brownian paths in one dimension.
pub fn brownian_paths(replicas: usize, steps: usize, dt: f64, nu: f64, seed: u64) -> Vec<EigenTrajectory> {
    let sd = (2.0 * nu * dt).sqrt();
    (0..replicas)
        .map(|r| {
            let mut g = rng::stream(seed, r as u64, "calibration/brownian");
            let mut x = normal(&mut g);
            let mut pos = Vec::with_capacity(steps + 1);
            pos.push(x);
            for _ in 0..steps {
                x += sd * normal(&mut g);
                pos.push(x);
            }
            let times = (0..=steps).map(|k| k as f64 * dt).collect();
            EigenTrajectory::from_positions(times, 1, 1, pos, r as u64).expect("consistent shape")
        })
        .collect()
}

/// Relaxing OU walkers `dx = −θ x dt + √(2ν) dW` started from `N(0, s0²)`,
/// sampled at `t − τ`, `t`, `t + τ` with the exact transition.
pub fn relaxing_ou(walkers: usize, theta: f64, nu: f64, s0: f64, t: f64, tau: f64, seed: u64) -> EigenTrajectory {
    let mut g = rng::stream(seed, 0, "calibration/ou");
    let mut step = |x: f64, dt: f64| {
        let decay = (-theta * dt).exp();
        x * decay + (nu / theta * (1.0 - decay * decay)).sqrt() * normal(&mut g)
    };
    let mut g0 = rng::stream(seed, 1, "calibration/ou-start");
    let x0: Vec<f64> = (0..walkers).map(|_| s0 * normal(&mut g0)).collect();
    let xa: Vec<f64> = x0.iter().map(|x| step(*x, t - tau)).collect();
    let xb: Vec<f64> = xa.iter().map(|x| step(*x, tau)).collect();
    let xc: Vec<f64> = xb.iter().map(|x| step(*x, tau)).collect();
    EigenTrajectory::from_positions(vec![t - tau, t, t + tau], walkers, 1, [xa, xb, xc].concat(), 0)
        .expect("consistent shape")
}

/// Exact current-velocity slope of [`relaxing_ou`] at time `t`.
pub fn relaxing_ou_slope(theta: f64, nu: f64, s0: f64, t: f64) -> f64 {
    let s2 = nu / theta + (s0 * s0 - nu / theta) * (-2.0 * theta * t).exp();
    -(theta - nu / s2)
}

fn advected(grid: &Grid, t: f64, c: f64) -> Result<FieldEstimate> {
    let rho = (0..grid.len())
        .map(|i| gaussian_pdf(grid.point(i)[0], c * t, 0.5))
        .collect();
    FieldEstimate::from_density(grid.clone(), rho)
}

/// Continuity residual of a Gaussian translating at speed `c`, with `dt = h`.
pub fn advection_residual(nodes: usize, c: f64) -> Result<f64> {
    let grid = Grid::line(-4.0, 4.0, nodes)?;
    let dt = grid.spacing[0];
    let v = advected(&grid, 0.5 * dt, c)?.with_velocity(vec![c; grid.len()])?;
    continuity_residual(&[advected(&grid, 0.0, c)?, advected(&grid, dt, c)?], &v, dt)
}

/// A 41×41 velocity field on `[−3, 3]²`.
pub fn planar_field(f: impl Fn(f64, f64) -> (f64, f64)) -> Result<FieldEstimate> {
    let grid = Grid::uniform(&[-3.0, -3.0], &[3.0, 3.0], &[41, 41])?;
    let v: Vec<f64> = (0..grid.len())
        .flat_map(|i| {
            let p = grid.point(i);
            let (a, b) = f(p[0], p[1]);
            [a, b]
        })
        .collect();
    FieldEstimate::from_density(grid.clone(), vec![1.0; grid.len()])?.with_velocity(v)
}

fn check(name: &str, measured: f64, expected: f64, tolerance: f64, passed: bool) -> CalibrationCheck {
    CalibrationCheck {
        name: name.into(),
        measured,
        expected,
        tolerance,
        passed: passed && measured.is_finite(),
    }
}

/// Runs the whole suite from one seed.
pub fn run_calibration(seed: u64) -> Result<CalibrationReport> {
    let mut checks = Vec::new();

    let nu = 0.25;
    let trajs = brownian_paths(200, 10_000, 0.01, nu, seed);
    let est = estimate_diffusion(&trajs, &DiffusionOptions::default())?;
    let rel = (est.nu_hat / nu - 1.0).abs();
    checks.push(check(
        "brownian_nu",
        est.nu_hat,
        nu,
        BROWNIAN_TOLERANCE,
        rel < BROWNIAN_TOLERANCE,
    ));

    let (theta, nu_ou, s0, t) = (1.0, 0.01, 1.0, 0.5);
    let traj = relaxing_ou(100_000, theta, nu_ou, s0, t, 0.01, seed);
    let grid = Grid::line(-0.6, 0.6, 25)?;
    let field = estimate_current_velocity(&[traj], t, &grid, 0.05, 1)?;
    let (v, se) = (field.v.unwrap_or_default(), field.v_stderr.unwrap_or_default());
    let (xs, vs, ws): (Vec<f64>, Vec<f64>, Vec<f64>) = (0..grid.len())
        .filter(|i| field.mask[*i] && se[*i] > 0.0)
        .map(|i| (grid.point(i)[0], v[i], 1.0 / (se[i] * se[i])))
        .fold(
            (Vec::new(), Vec::new(), Vec::new()),
            |(mut a, mut b, mut c), (x, y, w)| {
                a.push(x);
                b.push(y);
                c.push(w);
                (a, b, c)
            },
        );
    let slope = crate::stats::weighted_linear_fit(&xs, &vs, Some(&ws)).map_or(f64::NAN, |(_, s)| s);
    let exact = relaxing_ou_slope(theta, nu_ou, s0, t);
    let rel = (slope / exact - 1.0).abs();
    checks.push(check(
        "ou_velocity_slope",
        slope,
        exact,
        SLOPE_TOLERANCE,
        rel < SLOPE_TOLERANCE,
    ));

    let residuals = [41, 81, 161, 321]
        .iter()
        .map(|&n| advection_residual(n, 0.8))
        .collect::<Result<Vec<_>>>()?;
    let order = residuals
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    checks.push(check(
        "continuity_order",
        order,
        2.0,
        MIN_CONTINUITY_ORDER,
        order >= MIN_CONTINUITY_ORDER,
    ));

    let r = irrotationality_residual(&planar_field(|x, y| (x.cos(), y.cos()))?);
    checks.push(check(
        "gradient_irrotationality",
        r,
        0.0,
        IRROTATIONAL_LIMIT,
        r < IRROTATIONAL_LIMIT,
    ));
    let r = irrotationality_residual(&planar_field(|x, y| (-y, x))?);
    checks.push(check("rotation_flagged", r, 1.0, ROTATION_FLAG, r >= ROTATION_FLAG));

    Ok(CalibrationReport {
        seed,
        checks,
        continuity_residuals: residuals,
    })
}
