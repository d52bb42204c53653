//! Run manifests: everything needed to re-execute a run, plus wall-clock
//! metadata that is kept out of the data files.

use nlhv_core::matrix::PairSum;
use nlhv_core::quantum::NuConvention;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

pub const MANIFEST_VERSION: u32 = 1;
/// The commutator-squared term enters the potential with a positive sign.
pub const POTENTIAL_SIGN: &str = "commutator_squared_positive";
/// `∂_t ρ + ∇·(ρ v) = 0`.
pub const CONTINUITY_SIGN: &str = "standard";
/// `ħ = μ ν`.
pub const HBAR_DEFINITION: &str = "mu_nu";
/// `K = μ Σ_a Tr V_a²`.
pub const KINETIC_CONVENTION: &str = "mu_trace_v_squared";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub pair_sum: PairSum,
    pub potential_sign: String,
    pub kinetic: String,
    pub continuity_sign: String,
    pub hbar_definition: String,
    pub nu_conventions: Vec<NuConvention>,
}

impl Conventions {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            pair_sum: cfg.model.pair_sum,
            potential_sign: POTENTIAL_SIGN.into(),
            kinetic: KINETIC_CONVENTION.into(),
            continuity_sign: CONTINUITY_SIGN.into(),
            hbar_definition: HBAR_DEFINITION.into(),
            nu_conventions: cfg.oracle.nu_conventions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSeeds {
    pub replica: u64,
    /// Per-stream seeds keyed by stream tag.
    pub streams: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    pub code_version: String,
    /// Effective configuration after command-line overrides.
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub replica_seeds: Vec<ReplicaSeeds>,
    pub conventions: Conventions,
    /// Data files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock: WallClock,
}

pub fn code_version() -> String {
    format!("nlhv {}", env!("CARGO_PKG_VERSION"))
}
