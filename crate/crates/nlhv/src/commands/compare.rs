use std::path::Path;

use nlhv_core::estimators::{
    continuity_residual, estimate_current_velocity, estimate_density, estimate_diffusion, irrotationality_of,
    kde_on_grid, predicted_diffusion, silverman_bandwidth, DiffusionEstimate, EigenTrajectory, Grid,
};
use nlhv_core::quantum::{compare_densities, samples_vs_density_l1, DensityMetric};
use serde::{Deserialize, Serialize};

use super::oracle::OracleReport;
use super::RunContext;
use crate::error::{CliError, CliResult};
use crate::io::{parse_particles, write_json};

/// Walker histograms merge this many oracle cells per bin, as in the oracle.
const BIN_FACTOR: usize = 8;
/// Cells per axis for the velocity-field diagnostics.
const FIELD_CELLS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub reference: String,
    pub l1: f64,
    pub ks: f64,
    pub binned_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub samples: usize,
    pub bandwidth: f64,
    pub center_of_mass_subtracted: bool,
    /// Continuity residual of the coordinate-0 marginal at the middle frame.
    pub continuity: Option<f64>,
    pub irrotationality: Option<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub trajectory: String,
    pub oracle: String,
    pub n: usize,
    pub d: usize,
    pub temperature: Option<f64>,
    pub distances: Vec<Distance>,
    pub diffusion: Option<DiffusionEstimate>,
    pub diffusion_note: Option<String>,
    pub hbar_emergent: Option<f64>,
    pub nu_pred: Option<f64>,
    pub ratio: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl CompareReport {
    pub fn distance(&self, reference: &str) -> Option<&Distance> {
        self.distances.iter().find(|d| d.reference == reference)
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Coordinate 0 of every particle as its own 1-D trajectory.
fn marginal(trajs: &[EigenTrajectory]) -> CliResult<Vec<EigenTrajectory>> {
    trajs
        .iter()
        .map(|t| {
            let xs = (0..t.frames())
                .flat_map(|f| (0..t.n).map(move |i| t.coord(f, i, 0)))
                .collect();
            EigenTrajectory::from_positions(t.times.clone(), t.n, 1, xs, t.replica_id)
                .map_err(|e| CliError::from_core("marginal", e))
        })
        .collect()
}

fn distance(name: &str, grid: &Grid, rho_hat: &[f64], rho_ref: &[f64], samples: &[f64]) -> CliResult<Distance> {
    let ctx = format!("distance to {name}");
    let err = |e| CliError::from_core(&ctx, e);
    Ok(Distance {
        reference: name.into(),
        l1: compare_densities(grid, rho_hat, rho_ref, DensityMetric::L1).map_err(err)?,
        ks: compare_densities(grid, rho_hat, rho_ref, DensityMetric::Ks).map_err(err)?,
        binned_l1: samples_vs_density_l1(samples, grid, rho_ref, BIN_FACTOR).map_err(err)?,
    })
}

/// Sets the coordinate-0 marginal of tracked eigenvalues against the oracle
/// densities and a Gaussian at the emergent `ħ`; writes `compare.json`.
pub fn cmd_compare(ctx: &RunContext, trajectory_path: &Path, oracle_path: &Path) -> CliResult<CompareReport> {
    let (header, mut trajs) = parse_particles(&read(trajectory_path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", trajectory_path.display())))?;
    let oracle: OracleReport = serde_json::from_str(&read(oracle_path)?)
        .map_err(|e| CliError::Io(format!("{}: {e}", oracle_path.display())))?;
    let first = trajs
        .first()
        .ok_or_else(|| CliError::Usage(format!("{} holds no frames", trajectory_path.display())))?;
    let (n, d, frames) = (first.n, first.d, first.frames());
    let times = first.times.clone();
    let params = header.params;

    // a free centre of mass only wanders; the shape is what gets compared
    let subtract = params.kappa == 0.0 && n > 1;
    if subtract {
        for t in &mut trajs {
            t.subtract_center_of_mass();
        }
    }
    let marg = marginal(&trajs)?;
    let samples: Vec<f64> = marg.iter().flat_map(|t| t.positions.iter().copied()).collect();
    let bandwidth = ctx
        .config
        .analysis
        .bandwidth
        .unwrap_or_else(|| silverman_bandwidth(&samples, 1));
    let grid = &oracle.grid;
    let rho_hat = kde_on_grid(&samples, None, grid, bandwidth).map_err(|e| CliError::from_core("density", e))?;

    let mut distances = Vec::new();
    for r in &oracle.references {
        distances.push(distance(&r.name, grid, &rho_hat, &r.rho, &samples)?);
    }

    let (diffusion, diffusion_note) = match estimate_diffusion(&trajs, &ctx.config.analysis.diffusion) {
        Ok(est) => (Some(est), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let hbar_emergent = diffusion.as_ref().map(|est| params.mu * est.nu_hat);
    if let Some(hbar) = hbar_emergent.filter(|h| *h > 0.0) {
        let var = hbar / (2.0 * oracle.mass * oracle.omega0);
        let rho: Vec<f64> = grid
            .axis(0)
            .iter()
            .map(|x| (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
            .collect();
        distances.push(distance("emergent_ground", grid, &rho_hat, &rho, &samples)?);
    }
    let nu_pred = match (d >= 2, header.temperature) {
        (true, Some(temp)) => nlhv_core::estimators::scaled_temperature(&params, temp, n)
            .and_then(|t| predicted_diffusion(&params, t))
            .ok(),
        _ => None,
    };
    let ratio = match (&diffusion, nu_pred) {
        (Some(est), Some(p)) if p > 0.0 => Some(est.nu_hat / p),
        _ => None,
    };

    let continuity = if frames >= 3 {
        let mid = frames / 2;
        let line = Grid::covering(&samples, 1, 0.1, &[ctx.config.analysis.grid_cells]);
        line.ok().and_then(|line| {
            let rho: Option<Vec<_>> = (mid - 1..=mid + 1)
                .map(|f| estimate_density(&marg, times[f], &line, bandwidth).ok())
                .collect();
            let v = estimate_current_velocity(&marg, times[mid], &line, bandwidth, 1).ok()?;
            // too few samples per frame leaves nothing to test
            if !v.mask.iter().any(|m| *m) {
                return None;
            }
            continuity_residual(&rho?, &v, times[mid] - times[mid - 1]).ok()
        })
    } else {
        None
    };
    let irrotationality = if d >= 2 && frames >= 3 {
        irrotationality_of(&trajs, FIELD_CELLS).ok()
    } else {
        None
    };
    let max_residual = trajs
        .iter()
        .flat_map(|t| t.residuals.iter().copied())
        .fold(0.0_f64, f64::max);

    let report = CompareReport {
        trajectory: trajectory_path.display().to_string(),
        oracle: oracle_path.display().to_string(),
        n,
        d,
        temperature: header.temperature,
        distances,
        diffusion,
        diffusion_note,
        hbar_emergent,
        nu_pred,
        ratio,
        diagnostics: Diagnostics {
            samples: samples.len(),
            bandwidth,
            center_of_mass_subtracted: subtract,
            continuity,
            irrotationality,
            max_residual,
        },
    };
    write_json(&ctx.path("compare.json"), &report)?;
    ctx.write_manifest("compare", Vec::new(), &["compare.json"])?;
    Ok(report)
}
