use nlhv_core::estimators::Grid;
use nlhv_core::quantum::{
    evolve_schrodinger, free_packet_width, gaussian_packet, harmonic_potential, harmonic_state, nelson_drift_from_psi,
    nelson_evolve, periodic_grid, samples_vs_density_l1, Boundary, CoEvolvedDrift, FrozenDrift, NelsonEnsemble,
    NuConvention, Propagator, SolverReport,
};
use nlhv_core::rng::derive_seed;
use nlhv_core::stats;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::error::{CliError, CliResult};
use crate::io::write_json;
use crate::manifest::ReplicaSeeds;

/// Largest solver step used for the Schrödinger references.
const SOLVER_DT: f64 = 1e-4;
/// Target `dt E_max / ħ`, half the accuracy limit.
const PHASE_PER_STEP: f64 = 0.05;
/// Walker histograms merge this many grid cells per bin.
const BIN_FACTOR: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicStationarity {
    pub omega0: f64,
    pub period: f64,
    pub steps: u64,
    pub max_density_change: f64,
    pub solver: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub time: f64,
    pub sigma_numeric: f64,
    pub sigma_analytic: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelsonCheck {
    pub convention: NuConvention,
    pub nu: f64,
    pub walkers: usize,
    pub free_packet_l1: f64,
    pub free_packet_time: f64,
    pub harmonic_l1: f64,
    pub harmonic_variance: f64,
    pub harmonic_variance_expected: f64,
    pub harmonic_variance_stderr: f64,
    pub reflections: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDensity {
    pub name: String,
    pub time: f64,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub hbar: f64,
    pub mass: f64,
    pub omega0: f64,
    pub sigma0: f64,
    pub grid: Grid,
    pub harmonic: HarmonicStationarity,
    pub free_packet_widths: Vec<WidthRow>,
    pub nelson: Vec<NelsonCheck>,
    pub references: Vec<ReferenceDensity>,
}

impl OracleReport {
    pub fn reference(&self, name: &str) -> Option<&ReferenceDensity> {
        self.references.iter().find(|r| r.name == name)
    }
}

/// Solver step keeping the fastest mode's phase per step well below the limit.
fn solver_dt(grid: &Grid, potential: &[f64], hbar: f64, mass: f64) -> f64 {
    let k = std::f64::consts::PI / grid.spacing[0];
    let v = potential.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let e_max = hbar * hbar * k * k / (2.0 * mass) + v;
    SOLVER_DT.min(PHASE_PER_STEP * hbar / e_max)
}

fn core_err(ctx: &str) -> impl Fn(nlhv_core::Error) -> CliError + '_ {
    move |e| CliError::from_core(ctx, e)
}

/// Runs the quantum references and the Nelson A/B comparison; writes
/// `oracle.json` and `manifest.json`.
pub fn cmd_oracle(ctx: &RunContext) -> CliResult<OracleReport> {
    let o = &ctx.config.oracle;
    let master = ctx.require_seed("the Nelson walkers")?;
    let (hbar, mass) = (o.hbar, o.mass.unwrap_or(ctx.config.model.mu));
    let grid = periodic_grid(-0.5 * o.length, o.length, o.grid_nodes).map_err(core_err("oracle grid"))?;
    let t_free = 2.0 * mass * o.sigma0 * o.sigma0 / hbar;
    let widest = free_packet_width(o.sigma0, hbar, mass, t_free);
    if o.length < 12.0 * widest {
        return Err(CliError::Usage(format!(
            "oracle.length {} is below 12 sigma of the widest packet ({widest})",
            o.length
        )));
    }

    // harmonic ground state over one period
    let ground = harmonic_state(grid.clone(), 0, o.omega0, hbar, mass, Boundary::Periodic)
        .map_err(core_err("harmonic state"))?;
    let v_harm = harmonic_potential(&grid, mass, o.omega0);
    let period = 2.0 * std::f64::consts::PI / o.omega0;
    let steps = (period / solver_dt(&grid, &v_harm, hbar, mass)).ceil() as u64;
    let (after, solver) =
        evolve_schrodinger(&ground, &v_harm, period / steps as f64, steps).map_err(core_err("harmonic evolution"))?;
    let max_density_change = ground
        .density()
        .iter()
        .zip(after.density())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));

    // free packet width table
    let packet = gaussian_packet(grid.clone(), 0.0, o.sigma0, 0.0, hbar, mass, Boundary::Periodic)
        .map_err(core_err("free packet"))?;
    let zeros = vec![0.0; grid.len()];
    let rows = o.width_samples.max(2);
    let free_dt = solver_dt(&grid, &zeros, hbar, mass);
    let per_row = ((t_free / (rows - 1) as f64) / free_dt).ceil() as u64;
    let mut prop = Propagator::new(&packet, &zeros, t_free / ((rows - 1) as u64 * per_row) as f64)
        .map_err(core_err("free packet"))?;
    let mut psi = packet.clone();
    let mut widths = Vec::new();
    for row in 0..rows {
        if row > 0 {
            for _ in 0..per_row {
                prop.step(&mut psi).map_err(core_err("free packet"))?;
            }
        }
        let sigma_numeric = psi.moments().1.sqrt();
        let sigma_analytic = free_packet_width(o.sigma0, hbar, mass, psi.time);
        widths.push(WidthRow {
            time: psi.time,
            sigma_numeric,
            sigma_analytic,
            relative_error: (sigma_numeric / sigma_analytic - 1.0).abs(),
        });
    }
    let free_final = psi;

    // Nelson walkers under each ν convention
    let walker_steps = (t_free / o.dt).ceil() as u64;
    let walker_dt = t_free / walker_steps as f64;
    let substeps = (walker_dt / free_dt).ceil().max(1.0) as usize;
    let harmonic_steps = (o.harmonic_time / o.omega0 / o.dt).ceil() as u64;
    let mut nelson = Vec::new();
    let mut seeds = Vec::new();
    for (k, conv) in o.nu_conventions.iter().enumerate() {
        let nu = conv.nu(hbar, mass);
        let tag = format!("oracle/{}", conv.as_str());
        let seed = derive_seed(master, k as u64, &tag);
        seeds.push(ReplicaSeeds {
            replica: k as u64,
            streams: vec![(tag, seed)],
        });

        let start = NelsonEnsemble::sample(&packet, o.walkers, nu, seed);
        let mut source = CoEvolvedDrift::with_substeps(packet.clone(), &zeros, walker_dt, substeps, nu)
            .map_err(core_err("co-evolved drift"))?;
        let free = nelson_evolve(&start, &mut source, walker_dt, walker_steps, seed.wrapping_add(1))
            .map_err(core_err("nelson free packet"))?;
        let free_l1 = samples_vs_density_l1(&free.walkers, &grid, &source.psi.density(), BIN_FACTOR)
            .map_err(core_err("nelson free packet"))?;

        let start = NelsonEnsemble::sample(&ground, o.walkers, nu, seed.wrapping_add(2));
        let mut frozen = FrozenDrift(nelson_drift_from_psi(&ground, nu).map_err(core_err("ground drift"))?);
        let harm = nelson_evolve(&start, &mut frozen, o.dt, harmonic_steps, seed.wrapping_add(3))
            .map_err(core_err("nelson harmonic"))?;
        let harmonic_l1 = samples_vs_density_l1(&harm.walkers, &grid, &ground.density(), BIN_FACTOR)
            .map_err(core_err("nelson harmonic"))?;
        let expected = hbar / (2.0 * mass * o.omega0);
        nelson.push(NelsonCheck {
            convention: *conv,
            nu,
            walkers: o.walkers,
            free_packet_l1: free_l1,
            free_packet_time: free.time,
            harmonic_l1,
            harmonic_variance: stats::variance(&harm.walkers),
            harmonic_variance_expected: expected,
            harmonic_variance_stderr: expected * (2.0 / o.walkers as f64).sqrt(),
            reflections: free.reflections + harm.reflections,
        });
    }

    let report = OracleReport {
        hbar,
        mass,
        omega0: o.omega0,
        sigma0: o.sigma0,
        grid,
        harmonic: HarmonicStationarity {
            omega0: o.omega0,
            period,
            steps,
            max_density_change,
            solver,
        },
        free_packet_widths: widths,
        nelson,
        references: vec![
            ReferenceDensity {
                name: "harmonic_ground".into(),
                time: 0.0,
                rho: ground.density(),
            },
            ReferenceDensity {
                name: "free_packet".into(),
                time: free_final.time,
                rho: free_final.density(),
            },
        ],
    };
    write_json(&ctx.path("oracle.json"), &report)?;
    ctx.write_manifest("oracle", seeds, &["oracle.json"])?;
    Ok(report)
}
