//! Time evolution: velocity Verlet for the isolated system, BAOAB Langevin for
//! the canonical ensemble, trajectory recording, burn-in detection and the
//! kinetic temperature estimate.

mod integrator;

pub use integrator::{step_langevin, step_leapfrog, Integrator, NoiseOptions, Thermalize};

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::{
    com_momentum, eigenvalues, joint_diagonalize_from, kinetic_energy, MatrixConfiguration, ModelParams, ParticleFrame,
    Spectrum,
};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMode {
    Microcanonical,
    Langevin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub mode: IntegratorMode,
    /// Time step in units of `1/ω`.
    #[serde(default = "IntegratorConfig::default_dt")]
    pub dt: f64,
    pub steps: u64,
    /// Friction in units of `ω` (Langevin only).
    #[serde(default = "IntegratorConfig::default_gamma")]
    pub gamma: f64,
    /// Bath temperature in energy units, `k_B = 1` (Langevin only).
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "IntegratorConfig::default_record_every")]
    pub record_every: u64,
    /// Joint-diagonalize every `frame_every`-th recorded sample; 0 disables.
    #[serde(default = "IntegratorConfig::default_frame_every")]
    pub frame_every: u64,
    #[serde(default)]
    pub noise: NoiseOptions,
}

impl IntegratorConfig {
    fn default_dt() -> f64 {
        1e-2
    }
    fn default_gamma() -> f64 {
        0.1
    }
    fn default_record_every() -> u64 {
        1
    }
    fn default_frame_every() -> u64 {
        1
    }

    pub fn microcanonical(dt: f64, steps: u64) -> Self {
        Self {
            mode: IntegratorMode::Microcanonical,
            dt,
            steps,
            gamma: 0.0,
            temperature: 0.0,
            seed: 0,
            record_every: 1,
            frame_every: 0,
            noise: NoiseOptions::default(),
        }
    }

    pub fn langevin(dt: f64, steps: u64, gamma: f64, temperature: f64, seed: u64) -> Self {
        Self {
            mode: IntegratorMode::Langevin,
            dt,
            steps,
            gamma,
            temperature,
            seed,
            record_every: 1,
            frame_every: 0,
            noise: NoiseOptions::default(),
        }
    }

    pub fn with_record_every(mut self, every: u64) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_frame_every(mut self, every: u64) -> Self {
        self.frame_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if self.record_every < 1 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if self.mode == IntegratorMode::Langevin {
            if !(self.gamma > 0.0 && self.gamma.is_finite()) {
                return Err(invalid("gamma", "langevin mode requires gamma > 0"));
            }
            if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
                return Err(invalid("temperature", "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}

/// Parameter echo carried by every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordManifest {
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    /// False when a bath is attached: the centre-of-mass momentum then
    /// random-walks instead of being conserved.
    pub com_conserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub spectra: Vec<Spectrum>,
    pub frames: Vec<Option<ParticleFrame>>,
    /// `(K, U)` per sample.
    pub energies: Vec<(f64, f64)>,
    pub com_momenta: Vec<Vec<f64>>,
    pub manifest: RecordManifest,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_energies(&self) -> Vec<f64> {
        self.energies.iter().map(|(k, u)| k + u).collect()
    }
}

pub(crate) const FRAME_SWEEPS: usize = 100;

fn frame_tolerance(config: &MatrixConfiguration) -> f64 {
    let scale = config.x.iter().map(|x| x.max_abs()).fold(1.0, f64::max);
    1e-13 * scale
}

/// Evolves `config` and records observables every `record_every` steps.
///
/// Aborts with [`Error::NumericAbort`] as soon as any entry or the energy
/// stops being finite.
pub fn run(
    config: &MatrixConfiguration,
    params: &ModelParams,
    integrator: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    run_with_final(config, params, integrator).map(|(rec, _)| rec)
}

/// [`run`] that also hands back the final configuration.
pub fn run_with_final(
    config: &MatrixConfiguration,
    params: &ModelParams,
    integrator: &IntegratorConfig,
) -> Result<(TrajectoryRecord, MatrixConfiguration)> {
    params.validate()?;
    integrator.validate()?;
    config.check_shape(params)?;

    let mut cfg = config.clone();
    let mut stepper = Integrator::new(params, &cfg);
    let mut rng = rng::stream(integrator.seed, 0, "langevin");
    let mut record = TrajectoryRecord {
        times: Vec::new(),
        spectra: Vec::new(),
        frames: Vec::new(),
        energies: Vec::new(),
        com_momenta: Vec::new(),
        manifest: RecordManifest {
            params: *params,
            integrator: *integrator,
            com_conserved: integrator.mode == IntegratorMode::Microcanonical,
        },
    };
    let mut last_frame: Option<Vec<f64>> = None;

    let mut push = |cfg: &MatrixConfiguration, stepper: &Integrator, record: &mut TrajectoryRecord| {
        let index = record.times.len() as u64;
        record.times.push(cfg.time);
        record.spectra.push(eigenvalues(cfg));
        let frame = if integrator.frame_every > 0 && index.is_multiple_of(integrator.frame_every) {
            let jd = joint_diagonalize_from(cfg, last_frame.as_deref(), FRAME_SWEEPS, frame_tolerance(cfg));
            last_frame = Some(jd.frame.frame.clone());
            Some(jd.frame)
        } else {
            None
        };
        record.frames.push(frame);
        let k = kinetic_energy(cfg, params).unwrap_or(f64::NAN);
        record.energies.push((k, stepper.potential()));
        record.com_momenta.push(com_momentum(cfg, params));
    };

    if !cfg.is_finite() || !stepper.potential().is_finite() {
        return Err(Error::NumericAbort {
            step: 0,
            energy: stepper.potential(),
        });
    }
    push(&cfg, &stepper, &mut record);

    for step in 1..=integrator.steps {
        match integrator.mode {
            IntegratorMode::Microcanonical => stepper.leapfrog(&mut cfg, integrator.dt),
            IntegratorMode::Langevin => stepper.baoab(
                &mut cfg,
                integrator.dt,
                integrator.gamma,
                integrator.temperature,
                integrator.noise,
                &mut rng,
            ),
        }
        if !stepper.potential().is_finite() || !cfg.is_finite() {
            let k = kinetic_energy(&cfg, params).unwrap_or(f64::NAN);
            return Err(Error::NumericAbort {
                step,
                energy: k + stepper.potential(),
            });
        }
        if step % integrator.record_every == 0 {
            push(&cfg, &stepper, &mut record);
        }
    }
    Ok((record, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEstimate {
    pub temperature: f64,
    pub stderr: f64,
}

/// Kinetic temperature `2⟨K⟩ / n_dof`, `n_dof = d·N(N+1)/2`, with a blocking
/// error bar. Needs at least 32 samples.
pub fn measure_temperature(record: &TrajectoryRecord, params: &ModelParams) -> Result<TemperatureEstimate> {
    let dof = params.degrees_of_freedom() as f64;
    let series: Vec<f64> = record.energies.iter().map(|(k, _)| 2.0 * k / dof).collect();
    let stderr = stats::blocking_stderr(&series)
        .ok_or_else(|| Error::InsufficientData(format!("{} samples; blocking needs at least 32", series.len())))?;
    Ok(TemperatureEstimate {
        temperature: stats::mean(&series),
        stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationDiagnostics {
    /// Steps run before the accepted window began.
    pub burn_in_steps: u64,
    pub total_steps: u64,
    /// Integrated autocorrelation time of `U`, in steps.
    pub tau_potential: f64,
    /// Length of the accepted window, in steps.
    pub window_steps: u64,
    pub kinetic_temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationSettings {
    /// Accepted absolute deviation `|T_kin − T|`.
    pub tol: f64,
    pub max_steps: u64,
    /// Steps between convergence checks.
    pub check_every: u64,
    /// Floor on the window length, in steps.
    pub min_window: u64,
}

impl EquilibrationSettings {
    pub fn new(tol: f64, max_steps: u64) -> Self {
        Self {
            tol,
            max_steps,
            check_every: 500,
            min_window: 500,
        }
    }
}

/// Runs Langevin dynamics until the kinetic temperature, averaged over a
/// trailing window of ten autocorrelation times of `U`, sits within `tol` of
/// the bath temperature.
pub fn equilibrate(
    config: &MatrixConfiguration,
    params: &ModelParams,
    integrator: &IntegratorConfig,
    settings: &EquilibrationSettings,
) -> Result<(MatrixConfiguration, EquilibrationDiagnostics)> {
    params.validate()?;
    integrator.validate()?;
    config.check_shape(params)?;
    if integrator.mode != IntegratorMode::Langevin {
        return Err(invalid("mode", "equilibration requires langevin mode"));
    }
    let mut cfg = config.clone();
    if settings.tol.is_infinite() {
        return Ok((
            cfg,
            EquilibrationDiagnostics {
                burn_in_steps: 0,
                total_steps: 0,
                tau_potential: 0.0,
                window_steps: 0,
                kinetic_temperature: f64::NAN,
            },
        ));
    }

    let dof = params.degrees_of_freedom() as f64;
    let mut stepper = Integrator::new(params, &cfg);
    let mut rng = rng::stream(integrator.seed, 0, "equilibrate");
    let mut kin_t: Vec<f64> = Vec::new();
    let mut pot: Vec<f64> = Vec::new();
    let check_every = settings.check_every.max(1);
    let mut steps = 0u64;
    let mut last = (0.5, f64::NAN, 0u64);

    while steps < settings.max_steps {
        for _ in 0..check_every {
            stepper.baoab(
                &mut cfg,
                integrator.dt,
                integrator.gamma,
                integrator.temperature,
                integrator.noise,
                &mut rng,
            );
            steps += 1;
            if !stepper.potential().is_finite() || !cfg.is_finite() {
                return Err(Error::NumericAbort {
                    step: steps,
                    energy: stepper.potential(),
                });
            }
            kin_t.push(2.0 * crate::matrix::kinetic_unchecked(&cfg, params) / dof);
            pot.push(stepper.potential());
        }
        let half = &pot[pot.len() / 2..];
        let tau = stats::integrated_autocorrelation_time(half);
        let window = ((10.0 * tau).ceil() as u64).max(settings.min_window);
        if (kin_t.len() as u64) < window {
            continue;
        }
        let w = window as usize;
        let t_win = stats::mean(&kin_t[kin_t.len() - w..]);
        last = (tau, t_win, window);
        if (t_win - integrator.temperature).abs() <= settings.tol {
            return Ok((
                cfg,
                EquilibrationDiagnostics {
                    burn_in_steps: steps - window,
                    total_steps: steps,
                    tau_potential: tau,
                    window_steps: window,
                    kinetic_temperature: t_win,
                },
            ));
        }
    }
    Err(Error::NotConverged {
        steps,
        detail: format!(
            "kinetic temperature {} vs target {} (tau_U = {:.1} steps, window {})",
            last.1, integrator.temperature, last.0, last.2
        ),
    })
}

#[cfg(test)]
mod tests;
