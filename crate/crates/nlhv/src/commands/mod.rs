//! Subcommand implementations shared by the binary and the tests.

mod calibrate;
mod compare;
mod oracle;
mod simulate;
mod sweep;

pub use calibrate::{cmd_calibrate, CalibrationReport};
pub use compare::{cmd_compare, CompareReport};
pub use oracle::{cmd_oracle, OracleReport};
pub use simulate::{cmd_simulate, SimulationSummary};
pub use sweep::cmd_sweep;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::{self, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::io::write_json;
use crate::manifest::{code_version, Conventions, ReplicaSeeds, RunManifest, WallClock, MANIFEST_VERSION};

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub threads: Option<usize>,
}

/// A validated configuration with overrides applied.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    started: SystemTime,
    clock: Instant,
}

impl RunContext {
    pub fn new(mut config: ExperimentConfig, overrides: &Overrides) -> CliResult<Self> {
        if let Some(seed) = overrides.seed {
            config.ensemble.master_seed = Some(seed);
        }
        if let Some(r) = overrides.replicas {
            config.ensemble.replicas = r;
        }
        if let Some(out) = &overrides.out {
            config.output.dir = out.to_string_lossy().into_owned();
        }
        if overrides.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        config::validate(&config)?;
        Ok(Self {
            out_dir: PathBuf::from(&config.output.dir),
            config,
            threads: overrides.threads,
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    pub fn from_file(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::new(config::parse_config(&text)?, overrides)
    }

    pub fn master_seed(&self) -> u64 {
        self.config.ensemble.master_seed.unwrap_or(0)
    }

    pub fn require_seed(&self, what: &str) -> CliResult<u64> {
        self.config
            .ensemble
            .master_seed
            .ok_or_else(|| CliError::Usage(format!("`ensemble.master_seed` (or --seed) is required for {what}")))
    }

    /// Runs `f` on a pool of the requested size, or the global pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> CliResult<T> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_manifest(
        &self,
        command: &str,
        replica_seeds: Vec<ReplicaSeeds>,
        outputs: &[&str],
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            manifest_version: MANIFEST_VERSION,
            command: command.into(),
            code_version: code_version(),
            config: self.config.clone(),
            master_seed: self.master_seed(),
            replica_seeds,
            conventions: Conventions::of(&self.config),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            wall_clock: WallClock {
                started_unix_s: self
                    .started
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs_f64())
                    .unwrap_or(0.0),
                elapsed_s: self.clock.elapsed().as_secs_f64(),
                threads: self.threads.unwrap_or_else(rayon::current_num_threads),
            },
        };
        write_json(&self.path("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}
