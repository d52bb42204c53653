use nlhv_core::dynamics::{self, measure_temperature, IntegratorConfig, IntegratorMode, TrajectoryRecord};
use nlhv_core::estimators::EigenTrajectory;
use nlhv_core::matrix::{random_config, MatrixConfiguration};
use nlhv_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::error::{CliError, CliResult};
use crate::io::{particles_csv, trajectory_csv, write_atomic, write_json, ParticlesHeader};
use crate::manifest::ReplicaSeeds;

pub const TAG_INITIAL: &str = "initial";
pub const TAG_DYNAMICS: &str = "dynamics";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: u64,
    pub samples: usize,
    /// `max |E − E₀| / |E₀|` over recorded samples.
    pub max_relative_energy_drift: f64,
    /// `max |P − P₀|` of the centre-of-mass momentum.
    pub max_com_drift: f64,
    pub kinetic_temperature: Option<f64>,
    pub kinetic_temperature_stderr: Option<f64>,
    pub max_frame_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub replicas: Vec<ReplicaSummary>,
}

fn replica_seeds(master: u64, replica: u64) -> ReplicaSeeds {
    ReplicaSeeds {
        replica,
        streams: vec![
            (TAG_INITIAL.into(), derive_seed(master, replica, TAG_INITIAL)),
            (TAG_DYNAMICS.into(), derive_seed(master, replica, TAG_DYNAMICS)),
        ],
    }
}

fn run_replica(ctx: &RunContext, replica: u64) -> nlhv_core::Result<TrajectoryRecord> {
    let cfg = &ctx.config;
    let master = ctx.master_seed();
    let params = &cfg.model;
    let start = if cfg.initial.spread > 0.0 {
        random_config(params, cfg.initial.spread, derive_seed(master, replica, TAG_INITIAL))?
    } else {
        MatrixConfiguration::zeros(params)
    };
    let integrator = IntegratorConfig {
        seed: derive_seed(master, replica, TAG_DYNAMICS),
        ..cfg.integrator
    };
    let start = if cfg.initial.burn_in_steps > 0 {
        let burn = IntegratorConfig {
            steps: cfg.initial.burn_in_steps,
            record_every: cfg.initial.burn_in_steps,
            frame_every: 0,
            seed: derive_seed(integrator.seed, 0, "burn-in"),
            ..integrator
        };
        let (_, mut warm) = dynamics::run_with_final(&start, params, &burn)?;
        warm.time = 0.0;
        warm
    } else {
        start
    };
    dynamics::run(&start, params, &integrator)
}

fn summarize(rec: &TrajectoryRecord, replica: u64, ctx: &RunContext) -> ReplicaSummary {
    let e = rec.total_energies();
    let e0 = e[0];
    let scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };
    let drift = e.iter().map(|x| (x - e0).abs() / scale).fold(0.0, f64::max);
    let p0 = &rec.com_momenta[0];
    let com = rec
        .com_momenta
        .iter()
        .flat_map(|p| p.iter().zip(p0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let temp = if ctx.config.integrator.mode == IntegratorMode::Langevin {
        measure_temperature(rec, &ctx.config.model).ok()
    } else {
        None
    };
    let residual = rec.frames.iter().flatten().map(|f| f.residual).reduce(f64::max);
    ReplicaSummary {
        replica,
        samples: rec.len(),
        max_relative_energy_drift: drift,
        max_com_drift: com,
        kinetic_temperature: temp.map(|t| t.temperature),
        kinetic_temperature_stderr: temp.map(|t| t.stderr),
        max_frame_residual: residual,
    }
}

/// Runs every replica and writes `trajectory.csv`, `particles.csv` (when
/// frames are recorded), `summary.json` and `manifest.json`.
pub fn cmd_simulate(ctx: &RunContext) -> CliResult<SimulationSummary> {
    let cfg = &ctx.config;
    if cfg.integrator.mode == IntegratorMode::Langevin {
        ctx.require_seed("langevin dynamics")?;
    }
    let replicas = cfg.ensemble.replicas as u64;
    let results: Vec<nlhv_core::Result<TrajectoryRecord>> =
        ctx.install(|| (0..replicas).into_par_iter().map(|r| run_replica(ctx, r)).collect())?;
    let mut records = Vec::with_capacity(results.len());
    for (r, res) in results.into_iter().enumerate() {
        records.push(res.map_err(|e| CliError::from_core(&format!("replica {r}"), e))?);
    }

    let mut outputs = vec!["trajectory.csv", "summary.json"];
    write_atomic(&ctx.path("trajectory.csv"), trajectory_csv(&records).as_bytes())?;

    let with_frames = records.iter().any(|r| r.frames.iter().any(|f| f.is_some()));
    if with_frames {
        let trajs = records
            .iter()
            .enumerate()
            .map(|(r, rec)| EigenTrajectory::from_record(rec, r as u64))
            .collect::<nlhv_core::Result<Vec<_>>>()
            .map_err(|e| CliError::from_core("particle tracking", e))?;
        let header = ParticlesHeader {
            format: "nlhv-particles/1".into(),
            params: cfg.model,
            temperature: (cfg.integrator.mode == IntegratorMode::Langevin).then_some(cfg.integrator.temperature),
        };
        write_atomic(&ctx.path("particles.csv"), particles_csv(&header, &trajs).as_bytes())?;
        outputs.push("particles.csv");
    }

    let summary = SimulationSummary {
        replicas: records
            .iter()
            .enumerate()
            .map(|(r, rec)| summarize(rec, r as u64, ctx))
            .collect(),
    };
    write_json(&ctx.path("summary.json"), &summary)?;
    let seeds = (0..replicas).map(|r| replica_seeds(ctx.master_seed(), r)).collect();
    ctx.write_manifest("simulate", seeds, &outputs)?;
    Ok(summary)
}
