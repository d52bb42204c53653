//! Experiment configuration: strict JSON with every default written out.

use nlhv_core::dynamics::{IntegratorConfig, IntegratorMode};
use nlhv_core::estimators::{DiffusionOptions, SweepSettings};
use nlhv_core::matrix::ModelParams;
use nlhv_core::quantum::NuConvention;
use nlhv_core::Error as CoreError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Starting configuration of each replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Spread of the random symmetric start; zero starts from rest at the origin.
    pub spread: f64,
    /// Langevin steps discarded before recording.
    pub burn_in_steps: u64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            spread: 0.25,
            burn_in_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub replicas: usize,
    /// Required whenever a stochastic component runs.
    pub master_seed: Option<u64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            replicas: 1,
            master_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Nodes per axis of density and velocity grids.
    pub grid_cells: usize,
    /// Kernel bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
    pub diffusion: DiffusionOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            grid_cells: 64,
            bandwidth: None,
            diffusion: DiffusionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t_scaled: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(default = "defaults::sweep_dt")]
    pub dt: f64,
    #[serde(default = "defaults::sweep_gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::sweep_burn_in")]
    pub burn_in_steps: u64,
    #[serde(default = "defaults::sweep_production")]
    pub production_steps: u64,
    #[serde(default = "defaults::sweep_record_every")]
    pub record_every: u64,
    #[serde(default = "defaults::sweep_spread")]
    pub initial_spread: f64,
    #[serde(default = "defaults::sweep_field_cells")]
    pub field_cells: usize,
}

mod defaults {
    use super::SweepSettings;
    fn base() -> SweepSettings {
        SweepSettings::new(2, 0)
    }
    pub fn sweep_dt() -> f64 {
        base().dt
    }
    pub fn sweep_gamma() -> f64 {
        base().gamma
    }
    pub fn sweep_burn_in() -> u64 {
        base().burn_in_steps
    }
    pub fn sweep_production() -> u64 {
        base().production_steps
    }
    pub fn sweep_record_every() -> u64 {
        base().record_every
    }
    pub fn sweep_spread() -> f64 {
        base().initial_spread
    }
    pub fn sweep_field_cells() -> usize {
        base().field_cells
    }
}

impl SweepConfig {
    pub fn settings(&self, cfg: &ExperimentConfig, master_seed: u64) -> SweepSettings {
        SweepSettings {
            replicas: cfg.ensemble.replicas,
            master_seed,
            dt: self.dt,
            gamma: self.gamma,
            burn_in_steps: self.burn_in_steps,
            production_steps: self.production_steps,
            record_every: self.record_every,
            initial_spread: self.initial_spread,
            noise: cfg.integrator.noise,
            diffusion: DiffusionOptions {
                seed: master_seed,
                ..cfg.analysis.diffusion
            },
            field_cells: self.field_cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub hbar: f64,
    /// Particle mass; the model's `mu` when absent.
    pub mass: Option<f64>,
    /// Periodic grid nodes (power of two).
    pub grid_nodes: usize,
    pub length: f64,
    pub sigma0: f64,
    pub omega0: f64,
    pub dt: f64,
    pub walkers: usize,
    /// Time the harmonic ensemble runs, in units of `1/ω₀`.
    pub harmonic_time: f64,
    pub nu_conventions: Vec<NuConvention>,
    /// Rows of the free-packet width table.
    pub width_samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: None,
            grid_nodes: 512,
            length: 40.0,
            sigma0: 1.0,
            omega0: 1.0,
            dt: 2e-3,
            walkers: 100_000,
            harmonic_time: 4.0,
            nu_conventions: vec![NuConvention::HbarOverMu, NuConvention::HbarOverTwoMu],
            width_samples: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{path}`: {message}")]
    Semantic { path: String, message: String },
}

fn semantic(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        path: path.into(),
        message: message.into(),
    }
}

fn from_core(prefix: &str, e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter { name, reason } => semantic(format!("{prefix}.{name}"), reason),
        other => semantic(prefix, other.to_string()),
    }
}

/// Parses a configuration document, or the `config` member of a run
/// manifest, rejecting unknown keys and semantically invalid values.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("manifest_version") => map
            .remove("config")
            .ok_or_else(|| semantic("config", "manifest carries no config"))?,
        v => v,
    };
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        semantic(
            if path == "." { "(root)".into() } else { path },
            e.into_inner().to_string(),
        )
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn to_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

pub fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    cfg.model.validate().map_err(|e| from_core("model", e))?;
    cfg.integrator.validate().map_err(|e| from_core("integrator", e))?;
    if !(cfg.initial.spread >= 0.0 && cfg.initial.spread.is_finite()) {
        return Err(semantic("initial.spread", "must be non-negative and finite"));
    }
    if cfg.initial.burn_in_steps > 0 && cfg.integrator.mode != IntegratorMode::Langevin {
        return Err(semantic("initial.burn_in_steps", "burn-in needs langevin mode"));
    }
    if cfg.ensemble.replicas < 1 {
        return Err(semantic("ensemble.replicas", "must be at least 1"));
    }
    if cfg.analysis.grid_cells < 3 {
        return Err(semantic("analysis.grid_cells", "need at least three nodes per axis"));
    }
    if let Some(b) = cfg.analysis.bandwidth {
        if !(b > 0.0 && b.is_finite()) {
            return Err(semantic("analysis.bandwidth", "must be positive"));
        }
    }
    let stochastic = cfg.integrator.mode == IntegratorMode::Langevin || cfg.sweep.is_some();
    if stochastic && cfg.ensemble.master_seed.is_none() {
        return Err(semantic(
            "ensemble.master_seed",
            "required when langevin dynamics or a sweep is configured",
        ));
    }
    if let Some(sweep) = &cfg.sweep {
        if cfg.model.d < 2 {
            return Err(semantic(
                "sweep",
                format!(
                    "scaling formulas require model.d >= 2 (they are singular at d = 1), got d = {}",
                    cfg.model.d
                ),
            ));
        }
        if sweep.t_scaled.is_empty() || sweep.t_scaled.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(semantic("sweep.t_scaled", "needs at least one positive value"));
        }
        if sweep.n_list.is_empty() || sweep.n_list.iter().any(|n| *n < 2) {
            return Err(semantic("sweep.n_list", "needs at least one N, each N >= 2"));
        }
        if cfg.ensemble.replicas < 2 {
            return Err(semantic("ensemble.replicas", "a sweep needs at least two replicas"));
        }
        sweep.settings(cfg, 0).validate().map_err(|e| from_core("sweep", e))?;
    }
    let o = &cfg.oracle;
    if o.hbar.is_nan() || o.hbar <= 0.0 || o.mass.is_some_and(|m| m.is_nan() || m <= 0.0) {
        return Err(semantic("oracle.hbar", "hbar and mass must be positive"));
    }
    if !o.grid_nodes.is_power_of_two() || o.grid_nodes < 16 {
        return Err(semantic("oracle.grid_nodes", "must be a power of two, at least 16"));
    }
    for (name, v) in [
        ("oracle.length", o.length),
        ("oracle.sigma0", o.sigma0),
        ("oracle.omega0", o.omega0),
        ("oracle.dt", o.dt),
        ("oracle.harmonic_time", o.harmonic_time),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(semantic(name, "must be positive and finite"));
        }
    }
    if o.walkers < 2 {
        return Err(semantic("oracle.walkers", "need at least two walkers"));
    }
    if o.nu_conventions.is_empty() {
        return Err(semantic("oracle.nu_conventions", "list at least one convention"));
    }
    if cfg.output.dir.is_empty() {
        return Err(semantic("output.dir", "must not be empty"));
    }
    Ok(())
}
