use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::matrix::{potential_and_force, ForceWorkspace, MatrixConfiguration, ModelParams};
use crate::sym::SymMatrix;

/// Which matrix entries the heat bath acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thermalize {
    #[default]
    All,
    OffDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseOptions {
    #[serde(default)]
    pub thermalize: Thermalize,
    /// Leave the trace (centre-of-mass) velocity untouched by friction and noise.
    #[serde(default)]
    pub project_trace: bool,
}

/// Stepper holding the force at the current positions so each step costs one
/// force evaluation.
///
/// Equations of motion follow from `L = μ Σ Tr Ẋ² − U`: every packed entry
/// accelerates as `Ẍ = F/(2μ)`, where `F = −∂U/∂X` in matrix form. In the
/// `½ m q̇²` convention a diagonal entry has mass `2μ` and an off-diagonal
/// entry `4μ`.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: ModelParams,
    ws: ForceWorkspace,
    force: Vec<SymMatrix>,
    potential: f64,
    diagonal: Vec<bool>,
    noise: Vec<f64>,
}

impl Integrator {
    pub fn new(params: &ModelParams, config: &MatrixConfiguration) -> Self {
        let mut me = Self {
            params: *params,
            ws: ForceWorkspace::new(params.d, params.n),
            force: vec![SymMatrix::zeros(params.n); params.d],
            potential: 0.0,
            diagonal: SymMatrix::diagonal_flags(params.n),
            noise: vec![0.0; params.n * (params.n + 1) / 2],
        };
        me.refresh(config);
        me
    }

    /// Recomputes the cached force; needed after editing positions by hand.
    pub fn refresh(&mut self, config: &MatrixConfiguration) {
        self.potential = potential_and_force(config, &self.params, &mut self.ws, Some(&mut self.force));
    }

    pub fn potential(&self) -> f64 {
        self.potential
    }

    pub fn force(&self) -> &[SymMatrix] {
        &self.force
    }

    fn kick(&self, config: &mut MatrixConfiguration, dt: f64) {
        let scale = dt / (2.0 * self.params.mu);
        for (v, f) in config.v.iter_mut().zip(&self.force) {
            v.axpy(scale, f);
        }
    }

    fn drift(config: &mut MatrixConfiguration, dt: f64) {
        let MatrixConfiguration { x, v, .. } = config;
        for (x, v) in x.iter_mut().zip(v.iter()) {
            x.axpy(dt, v);
        }
    }

    /// Velocity Verlet.
    pub fn leapfrog(&mut self, config: &mut MatrixConfiguration, dt: f64) {
        self.kick(config, 0.5 * dt);
        Self::drift(config, dt);
        self.refresh(config);
        self.kick(config, 0.5 * dt);
        config.time += dt;
    }

    /// One BAOAB step of underdamped Langevin dynamics at temperature `t`.
    pub fn baoab<R: Rng + ?Sized>(
        &mut self,
        config: &mut MatrixConfiguration,
        dt: f64,
        gamma: f64,
        temperature: f64,
        opts: NoiseOptions,
        rng: &mut R,
    ) {
        self.kick(config, 0.5 * dt);
        Self::drift(config, 0.5 * dt);
        self.ornstein_uhlenbeck(config, dt, gamma, temperature, opts, rng);
        Self::drift(config, 0.5 * dt);
        self.refresh(config);
        self.kick(config, 0.5 * dt);
        config.time += dt;
    }

    fn ornstein_uhlenbeck<R: Rng + ?Sized>(
        &mut self,
        config: &mut MatrixConfiguration,
        dt: f64,
        gamma: f64,
        temperature: f64,
        opts: NoiseOptions,
        rng: &mut R,
    ) {
        let n = self.params.n;
        let c = (-gamma * dt).exp();
        let amp = ((1.0 - c * c) * temperature.max(0.0)).sqrt();
        let sd_diag = amp / self.params.diagonal_mass().sqrt();
        let sd_off = amp / (2.0 * self.params.diagonal_mass()).sqrt();
        let diag_bath = opts.thermalize == Thermalize::All;
        let project = opts.project_trace && diag_bath;

        for v in config.v.iter_mut() {
            for (k, xi) in self.noise.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                *xi = z * if self.diagonal[k] { sd_diag } else { sd_off };
            }
            let trace_mean = if project { v.trace() / n as f64 } else { 0.0 };
            let noise_mean = if project {
                self.noise
                    .iter()
                    .zip(&self.diagonal)
                    .filter(|(_, &d)| d)
                    .map(|(x, _)| *x)
                    .sum::<f64>()
                    / n as f64
            } else {
                0.0
            };
            for ((vk, &xi), &is_diag) in v.packed_mut().iter_mut().zip(&self.noise).zip(&self.diagonal) {
                if is_diag {
                    if !diag_bath {
                        continue;
                    }
                    *vk = trace_mean + c * (*vk - trace_mean) + (xi - noise_mean);
                } else {
                    *vk = c * *vk + xi;
                }
            }
        }
    }
}

/// One velocity-Verlet step of `dt`.
pub fn step_leapfrog(config: &MatrixConfiguration, params: &ModelParams, dt: f64) -> MatrixConfiguration {
    let mut out = config.clone();
    Integrator::new(params, config).leapfrog(&mut out, dt);
    out
}

/// One BAOAB Langevin step of `dt` with friction `gamma` at temperature `temperature`.
pub fn step_langevin<R: Rng + ?Sized>(
    config: &MatrixConfiguration,
    params: &ModelParams,
    dt: f64,
    gamma: f64,
    temperature: f64,
    rng: &mut R,
) -> MatrixConfiguration {
    let mut out = config.clone();
    Integrator::new(params, config).baoab(&mut out, dt, gamma, temperature, NoiseOptions::default(), rng);
    out
}
