use nlhv_core::estimators::{run_replica, scaling_point, temperature_for, trend_report, ScalingPoint, TrendReport};
use nlhv_core::matrix::ModelParams;
use nlhv_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::error::{CliError, CliResult};
use crate::io::{scaling_csv, write_atomic, write_json};
use crate::manifest::ReplicaSeeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEntry {
    pub t_scaled: f64,
    pub report: TrendReport,
}

/// Runs the scaling sweep for every configured `t` and `N`; writes
/// `scaling.csv`, `trend.json` and `manifest.json`.
pub fn cmd_sweep(ctx: &RunContext) -> CliResult<Vec<ScalingPoint>> {
    let cfg = &ctx.config;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("the configuration has no `sweep` section".into()))?;
    let master = ctx.require_seed("a sweep")?;
    let settings = sweep.settings(cfg, master);
    let mut points = Vec::new();
    let mut trends = Vec::new();
    for &t in &sweep.t_scaled {
        let mut at_t = Vec::new();
        for &n in &sweep.n_list {
            let params = ModelParams { n, ..cfg.model };
            let temperature = temperature_for(&params, t, n).map_err(|e| CliError::from_core("sweep", e))?;
            let trajs: Vec<_> = ctx.install(|| {
                (0..settings.replicas as u64)
                    .into_par_iter()
                    .map(|r| run_replica(&params, temperature, &settings, r))
                    .collect::<Vec<_>>()
            })?;
            let trajs = trajs
                .into_iter()
                .collect::<nlhv_core::Result<Vec<_>>>()
                .map_err(|e| CliError::from_core(&format!("sweep N = {n}, t = {t}"), e))?;
            let p = scaling_point(&params, t, &trajs, &settings)
                .map_err(|e| CliError::from_core(&format!("sweep N = {n}, t = {t}"), e))?;
            at_t.push(p);
        }
        trends.push(TrendEntry {
            t_scaled: t,
            report: trend_report(&at_t),
        });
        points.extend(at_t);
    }
    write_atomic(&ctx.path("scaling.csv"), scaling_csv(&points, &cfg.model).as_bytes())?;
    write_json(&ctx.path("trend.json"), &trends)?;
    let seeds = sweep
        .n_list
        .iter()
        .flat_map(|&n| {
            (0..settings.replicas as u64).map(move |r| ReplicaSeeds {
                replica: r,
                streams: vec![(format!("sweep/n={n}"), derive_seed(master, r, &format!("sweep/n={n}")))],
            })
        })
        .collect();
    ctx.write_manifest("sweep", seeds, &["scaling.csv", "trend.json"])?;
    Ok(points)
}
