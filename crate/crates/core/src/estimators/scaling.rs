use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::density::silverman_bandwidth;
use super::diffusion::{estimate_diffusion, DiffusionOptions};
use super::grid::Grid;
use super::residuals::irrotationality_residual;
use super::tracking::EigenTrajectory;
use super::velocity::estimate_current_velocity_pooled;
use crate::dynamics::{self, IntegratorConfig, NoiseOptions};
use crate::error::{invalid, Error, Result};
use crate::matrix::{MatrixConfiguration, ModelParams};
use crate::rng;

fn require_d_ge_2(params: &ModelParams) -> Result<()> {
    if params.d < 2 {
        return Err(Error::Domain(format!(
            "scaling formulas need d >= 2 (they diverge at d = 1), got d = {}",
            params.d
        )));
    }
    Ok(())
}

/// `t = N T / (8 (d − 1) μ ω²)`.
pub fn scaled_temperature(params: &ModelParams, temperature: f64, n: usize) -> Result<f64> {
    require_d_ge_2(params)?;
    if !(temperature >= 0.0) {
        return Err(invalid("temperature", "must be non-negative"));
    }
    let d1 = (params.d - 1) as f64;
    Ok(n as f64 * temperature / (8.0 * d1 * params.mu * params.omega * params.omega))
}

/// Bath temperature placing `N` at scaled temperature `t`.
pub fn temperature_for(params: &ModelParams, t_scaled: f64, n: usize) -> Result<f64> {
    require_d_ge_2(params)?;
    if !(t_scaled >= 0.0) || n == 0 {
        return Err(invalid("t_scaled", "needs t >= 0 and N >= 1"));
    }
    let d1 = (params.d - 1) as f64;
    Ok(8.0 * d1 * params.mu * params.omega * params.omega * t_scaled / n as f64)
}

/// `ν_λ = ω d t^{3/2} / (4 (d − 1)^{3/2})`.
pub fn predicted_diffusion(params: &ModelParams, t_scaled: f64) -> Result<f64> {
    require_d_ge_2(params)?;
    if !(t_scaled >= 0.0) {
        return Err(invalid("t_scaled", "must be non-negative"));
    }
    let d = params.d as f64;
    Ok(params.omega * d * t_scaled.powf(1.5) / (4.0 * (d - 1.0).powf(1.5)))
}

/// `ħ = μ ν_λ`.
pub fn emergent_hbar(params: &ModelParams, nu_lambda: f64) -> Result<f64> {
    if !(nu_lambda >= 0.0) {
        return Err(invalid("nu_lambda", "must be non-negative"));
    }
    Ok(params.mu * nu_lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub temperature: f64,
    pub t_scaled: f64,
    pub nu_hat: f64,
    pub nu_stderr: f64,
    pub nu_pred: f64,
    /// `μ ν̂`.
    pub hbar_emergent: f64,
    pub irrotationality: f64,
    pub per_direction: Vec<f64>,
    pub replicas: usize,
    /// Largest joint-diagonalization residual seen in the production run.
    pub max_residual: f64,
}

impl ScalingPoint {
    pub fn ratio(&self) -> f64 {
        self.nu_hat / self.nu_pred
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub replicas: usize,
    pub master_seed: u64,
    #[serde(default = "SweepSettings::default_dt")]
    pub dt: f64,
    #[serde(default = "SweepSettings::default_gamma")]
    pub gamma: f64,
    #[serde(default = "SweepSettings::default_burn_in")]
    pub burn_in_steps: u64,
    #[serde(default = "SweepSettings::default_production")]
    pub production_steps: u64,
    #[serde(default = "SweepSettings::default_record_every")]
    pub record_every: u64,
    /// Standard deviation of the commuting start positions.
    #[serde(default = "SweepSettings::default_spread")]
    pub initial_spread: f64,
    #[serde(default)]
    pub noise: NoiseOptions,
    #[serde(default)]
    pub diffusion: DiffusionOptions,
    /// Nodes per axis of the grid used for the irrotationality residual.
    #[serde(default = "SweepSettings::default_field_cells")]
    pub field_cells: usize,
}

impl SweepSettings {
    fn default_dt() -> f64 {
        1e-2
    }
    fn default_gamma() -> f64 {
        0.1
    }
    fn default_burn_in() -> u64 {
        20_000
    }
    fn default_production() -> u64 {
        10_000
    }
    fn default_record_every() -> u64 {
        10
    }
    fn default_spread() -> f64 {
        1.0
    }
    fn default_field_cells() -> usize {
        12
    }

    pub fn new(replicas: usize, master_seed: u64) -> Self {
        Self {
            replicas,
            master_seed,
            dt: Self::default_dt(),
            gamma: Self::default_gamma(),
            burn_in_steps: Self::default_burn_in(),
            production_steps: Self::default_production(),
            record_every: Self::default_record_every(),
            initial_spread: Self::default_spread(),
            noise: NoiseOptions::default(),
            diffusion: DiffusionOptions::default(),
            field_cells: Self::default_field_cells(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(invalid("replicas", "need at least two for error bars"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma", "must be positive"));
        }
        if self.record_every == 0 || self.production_steps < self.record_every {
            return Err(invalid("record_every", "must be in 1..=production_steps"));
        }
        if !(self.initial_spread >= 0.0) {
            return Err(invalid("initial_spread", "must be non-negative"));
        }
        if self.field_cells < 3 {
            return Err(invalid("field_cells", "need at least three nodes per axis"));
        }
        Ok(())
    }
}

/// Seed tag for replica streams of one matrix size.
fn replica_tag(n: usize) -> alloc::string::String {
    format!("sweep/n={n}")
}

/// One replica at size `params.n`: a commuting start, a fixed Langevin
/// burn-in, then a production run whose joint-diagonal frames are tracked.
pub fn run_replica(
    params: &ModelParams,
    temperature: f64,
    settings: &SweepSettings,
    replica: u64,
) -> Result<EigenTrajectory> {
    let tag = replica_tag(params.n);
    let seed = rng::derive_seed(settings.master_seed, replica, &tag);
    let mut start_rng = rng::stream(settings.master_seed, replica, &format!("{tag}/start"));
    let positions: Vec<Vec<f64>> = (0..params.n)
        .map(|_| {
            (0..params.d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut start_rng);
                    settings.initial_spread * z
                })
                .collect()
        })
        .collect();
    let start = MatrixConfiguration::from_positions(params, &positions)?;

    let mut burn = IntegratorConfig::langevin(settings.dt, settings.burn_in_steps, settings.gamma, temperature, seed)
        .with_record_every(settings.burn_in_steps.max(1))
        .with_frame_every(0);
    burn.noise = settings.noise;
    let (_, warm) = dynamics::run_with_final(&start, params, &burn)?;

    let mut prod = IntegratorConfig::langevin(
        settings.dt,
        settings.production_steps,
        settings.gamma,
        temperature,
        rng::derive_seed(seed, 1, "production"),
    )
    .with_record_every(settings.record_every)
    .with_frame_every(1);
    prod.noise = settings.noise;
    let record = dynamics::run(&warm, params, &prod)?;
    EigenTrajectory::from_record(&record, replica)
}

/// Reduces an ensemble of replicas at one `N` to a [`ScalingPoint`].
pub fn scaling_point(
    params: &ModelParams,
    t_scaled: f64,
    trajectories: &[EigenTrajectory],
    settings: &SweepSettings,
) -> Result<ScalingPoint> {
    let temperature = temperature_for(params, t_scaled, params.n)?;
    let diffusion = estimate_diffusion(trajectories, &settings.diffusion)?;
    let nu_pred = predicted_diffusion(params, t_scaled)?;
    let irrotationality = irrotationality_of(trajectories, settings.field_cells)?;
    let max_residual = trajectories
        .iter()
        .flat_map(|t| t.residuals.iter().copied())
        .fold(0.0_f64, f64::max);
    Ok(ScalingPoint {
        n: params.n,
        temperature,
        t_scaled: scaled_temperature(params, temperature, params.n)?,
        nu_hat: diffusion.nu_hat,
        nu_stderr: diffusion.stderr,
        nu_pred,
        hbar_emergent: emergent_hbar(params, diffusion.nu_hat)?,
        irrotationality,
        per_direction: diffusion.per_direction,
        replicas: trajectories.len(),
        max_residual,
    })
}

/// Irrotationality residual of the current velocity pooled over every frame,
/// measured in the centre-of-mass frame.
pub fn irrotationality_of(trajectories: &[EigenTrajectory], cells: usize) -> Result<f64> {
    let d = trajectories.first().map(|t| t.d).unwrap_or(0);
    if d < 2 {
        return Ok(0.0);
    }
    let mut centred: Vec<EigenTrajectory> = trajectories.to_vec();
    let mut all = Vec::new();
    for t in &mut centred {
        t.subtract_center_of_mass();
        all.extend_from_slice(&t.positions);
    }
    let counts = alloc::vec![cells; d];
    let grid = Grid::covering(&all, d, 0.0, &counts)?;
    let bandwidth = silverman_bandwidth(&all, d).max(grid.spacing.iter().fold(0.0, |m: f64, s| m.max(*s)));
    let times = &centred[0].times;
    let lag = 1;
    let query: Vec<f64> = times[lag..times.len().saturating_sub(lag)].to_vec();
    let field = estimate_current_velocity_pooled(&centred, &query, &grid, bandwidth, lag)?;
    Ok(irrotationality_residual(&field))
}

/// Sequential sweep over `n_list` at fixed scaled temperature.
pub fn scaling_sweep(
    base: &ModelParams,
    t_scaled: f64,
    n_list: &[usize],
    settings: &SweepSettings,
) -> Result<Vec<ScalingPoint>> {
    require_d_ge_2(base)?;
    settings.validate()?;
    if !(t_scaled > 0.0) {
        return Err(invalid("t_scaled", "must be positive"));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n < 2 {
            return Err(invalid("n_list", "every N must be at least 2"));
        }
        let params = ModelParams { n, ..*base };
        let temperature = temperature_for(&params, t_scaled, n)?;
        let trajs = (0..settings.replicas as u64)
            .map(|r| run_replica(&params, temperature, settings, r))
            .collect::<Result<Vec<_>>>()?;
        out.push(scaling_point(&params, t_scaled, &trajs, settings)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub n: Vec<usize>,
    pub ratio: Vec<f64>,
    pub ratio_stderr: Vec<f64>,
    /// `|ratio − 1|` never grows with `N`.
    pub monotone_toward_prediction: bool,
    pub all_finite: bool,
}

/// Orders points by `N` and reports whether `ν̂ / ν_pred` approaches one.
pub fn trend_report(points: &[ScalingPoint]) -> TrendReport {
    let mut sorted: Vec<&ScalingPoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.n);
    let ratio: Vec<f64> = sorted.iter().map(|p| p.ratio()).collect();
    let ratio_stderr = sorted.iter().map(|p| p.nu_stderr / p.nu_pred).collect();
    let monotone = ratio.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    let all_finite = sorted
        .iter()
        .all(|p| p.nu_hat.is_finite() && p.nu_stderr.is_finite() && p.irrotationality.is_finite());
    TrendReport {
        n: sorted.iter().map(|p| p.n).collect(),
        ratio,
        ratio_stderr,
        monotone_toward_prediction: monotone,
        all_finite,
    }
}
