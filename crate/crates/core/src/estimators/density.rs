use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::grid::{normalize, FieldEstimate, Grid};
use super::tracking::EigenTrajectory;
use crate::error::{invalid, Error, Result};
use crate::stats;

/// Kernel support in bandwidths; beyond this the Gaussian is below 1e-14.
const KERNEL_CUTOFF: f64 = 8.0;

/// Per-axis Gaussian factors for one point: `(first node, values)`.
fn axis_factors(grid: &Grid, a: usize, x: f64, h: f64) -> (usize, Vec<f64>) {
    let lo = grid.lower[a];
    let dx = grid.spacing[a];
    let count = grid.counts[a] as isize;
    let first = (((x - KERNEL_CUTOFF * h - lo) / dx).floor() as isize).clamp(0, count);
    let last = (((x + KERNEL_CUTOFF * h - lo) / dx).ceil() as isize).clamp(-1, count - 1);
    let mut vals = Vec::new();
    let mut k = first;
    while k <= last {
        let z = (lo + k as f64 * dx - x) / h;
        vals.push((-0.5 * z * z).exp());
        k += 1;
    }
    (first as usize, vals)
}

/// Visits every node in the product of per-axis windows with the product weight.
pub(crate) fn for_each_kernel_node<F: FnMut(usize, f64)>(grid: &Grid, point: &[f64], h: f64, mut f: F) {
    let d = grid.dim();
    let factors: Vec<(usize, Vec<f64>)> = (0..d).map(|a| axis_factors(grid, a, point[a], h)).collect();
    if factors.iter().any(|(_, v)| v.is_empty()) {
        return;
    }
    let mut counter = vec![0usize; d];
    loop {
        let mut idx = 0usize;
        let mut w = 1.0;
        for a in 0..d {
            idx = idx * grid.counts[a] + factors[a].0 + counter[a];
            w *= factors[a].1[counter[a]];
        }
        f(idx, w);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            counter[a] += 1;
            if counter[a] < factors[a].1.len() {
                break;
            }
            counter[a] = 0;
        }
    }
}

/// Gaussian kernel density of `points` (flattened, one point per `grid.dim()`
/// values) on the grid nodes, normalized to unit mass on the grid.
pub fn kde_on_grid(points: &[f64], weights: Option<&[f64]>, grid: &Grid, bandwidth: f64) -> Result<Vec<f64>> {
    let d = grid.dim();
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(invalid("bandwidth", "must be positive"));
    }
    if points.is_empty() || !points.len().is_multiple_of(d) {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    let mut rho = vec![0.0; grid.len()];
    for (k, p) in points.chunks_exact(d).enumerate() {
        let w = weights.map_or(1.0, |w| w[k]);
        for_each_kernel_node(grid, p, bandwidth, |idx, kw| rho[idx] += w * kw);
    }
    normalize(&mut rho, grid.cell_volume())?;
    Ok(rho)
}

/// Silverman-style rule. In one dimension `0.9 · min(σ, IQR/1.34) · n^{-1/5}`;
/// in `d` dimensions the mean of `σ_a (4/((d+2) n))^{1/(d+4)}`.
pub fn silverman_bandwidth(points: &[f64], d: usize) -> f64 {
    let n = points.len() / d.max(1);
    if n < 2 {
        return 1.0;
    }
    let nf = n as f64;
    let mut acc = 0.0;
    for a in 0..d {
        let mut col: Vec<f64> = points.chunks_exact(d).map(|p| p[a]).collect();
        let sd = stats::variance(&col).sqrt();
        let h = if d == 1 {
            col.sort_by(f64::total_cmp);
            let q = |f: f64| col[((f * (n - 1) as f64).round() as usize).min(n - 1)];
            let iqr = q(0.75) - q(0.25);
            let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
            0.9 * spread * nf.powf(-0.2)
        } else {
            sd * (4.0 / ((d as f64 + 2.0) * nf)).powf(1.0 / (d as f64 + 4.0))
        };
        acc += h;
    }
    let h = acc / d as f64;
    if h > 0.0 {
        h
    } else {
        1e-3
    }
}

/// All particle positions from every trajectory at the frame nearest `t`.
pub fn samples_at(trajectories: &[EigenTrajectory], t: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for traj in trajectories {
        if let Some(f) = traj.nearest_frame(t) {
            out.extend_from_slice(traj.frame_slice(f));
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    Ok(out)
}

/// Kernel density of all particles and replicas at `query_time`.
pub fn estimate_density(
    trajectories: &[EigenTrajectory],
    query_time: f64,
    grid: &Grid,
    bandwidth: f64,
) -> Result<FieldEstimate> {
    check_dims(trajectories, grid)?;
    let points = samples_at(trajectories, query_time)?;
    let rho = kde_on_grid(&points, None, grid, bandwidth)?;
    let n_samples = points.len() / grid.dim();
    Ok(FieldEstimate {
        mask: vec![true; grid.len()],
        grid: grid.clone(),
        rho,
        v: None,
        v_stderr: None,
        u: None,
        bandwidth,
        n_samples,
    })
}

pub(crate) fn check_dims(trajectories: &[EigenTrajectory], grid: &Grid) -> Result<()> {
    if trajectories.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    if trajectories.iter().any(|t| t.d != grid.dim()) {
        return Err(Error::GridMismatch("trajectory dimension differs from grid".into()));
    }
    Ok(())
}
