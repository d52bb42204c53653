use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::density::{check_dims, for_each_kernel_node, kde_on_grid};
use super::grid::{FieldEstimate, Grid};
use super::tracking::EigenTrajectory;
use crate::error::{invalid, Error, Result};

/// Nodes need at least this many effective samples to carry a velocity.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

/// Nelson current velocity at one time; see [`estimate_current_velocity_pooled`].
pub fn estimate_current_velocity(
    trajectories: &[EigenTrajectory],
    query_time: f64,
    grid: &Grid,
    bandwidth: f64,
    lag: usize,
) -> Result<FieldEstimate> {
    estimate_current_velocity_pooled(trajectories, &[query_time], grid, bandwidth, lag)
}

/// Current velocity `v(λ) = E[(x(t+τ) − x(t−τ)) / 2τ | x(t) = λ]` by
/// Nadaraya–Watson regression, pooling samples from every query time.
///
/// `lag` is in recorded frames. Nodes with fewer than
/// [`MIN_EFFECTIVE_SAMPLES`] effective samples are masked.
pub fn estimate_current_velocity_pooled(
    trajectories: &[EigenTrajectory],
    query_times: &[f64],
    grid: &Grid,
    bandwidth: f64,
    lag: usize,
) -> Result<FieldEstimate> {
    check_dims(trajectories, grid)?;
    if lag < 1 {
        return Err(invalid("lag", "must be at least one recorded step"));
    }
    if !(bandwidth > 0.0) {
        return Err(invalid("bandwidth", "must be positive"));
    }
    let d = grid.dim();
    let cells = grid.len();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for traj in trajectories {
        for &t in query_times {
            let Some(f) = traj.nearest_frame(t) else { continue };
            if f < lag || f + lag >= traj.frames() {
                continue;
            }
            let span = traj.times[f + lag] - traj.times[f - lag];
            for i in 0..traj.n {
                let x = traj.position(f, i);
                let ahead = traj.position(f + lag, i);
                let behind = traj.position(f - lag, i);
                points.extend_from_slice(x);
                values.extend(ahead.iter().zip(behind).map(|(a, b)| (a - b) / span));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::InsufficientData(
            "no samples with recorded frames on both sides of the query time".into(),
        ));
    }

    let mut w_sum = vec![0.0; cells];
    let mut w_sq = vec![0.0; cells];
    let mut wy = vec![0.0; cells * d];
    let mut wyy = vec![0.0; cells * d];
    for (p, y) in points.chunks_exact(d).zip(values.chunks_exact(d)) {
        for_each_kernel_node(grid, p, bandwidth, |idx, w| {
            w_sum[idx] += w;
            w_sq[idx] += w * w;
            for a in 0..d {
                wy[idx * d + a] += w * y[a];
                wyy[idx * d + a] += w * y[a] * y[a];
            }
        });
    }

    let mut v = vec![0.0; cells * d];
    let mut se = vec![f64::INFINITY; cells * d];
    let mut mask = vec![false; cells];
    for idx in 0..cells {
        if w_sum[idx] <= 0.0 {
            continue;
        }
        let n_eff = w_sum[idx] * w_sum[idx] / w_sq[idx];
        if n_eff < MIN_EFFECTIVE_SAMPLES {
            continue;
        }
        mask[idx] = true;
        for a in 0..d {
            let m = wy[idx * d + a] / w_sum[idx];
            let var = (wyy[idx * d + a] / w_sum[idx] - m * m).max(0.0);
            v[idx * d + a] = m;
            // weighted-mean standard error with Kish's effective sample size
            se[idx * d + a] = (var / n_eff).sqrt();
        }
    }

    let rho = kde_on_grid(&points, None, grid, bandwidth)?;
    Ok(FieldEstimate {
        grid: grid.clone(),
        rho,
        v: Some(v),
        v_stderr: Some(se),
        u: None,
        mask,
        bandwidth,
        n_samples: points.len() / d,
    })
}

/// Osmotic velocity `u = ν ∇ ln ρ` by central differences.
///
/// Nodes whose density (or a neighbour's) falls below `floor · max ρ`, and
/// boundary nodes, are masked. Errors when every node is masked.
pub fn estimate_osmotic_velocity(rho_estimate: &FieldEstimate, nu: f64, floor: f64) -> Result<FieldEstimate> {
    let grid = &rho_estimate.grid;
    let d = grid.dim();
    let rho = &rho_estimate.rho;
    let max_rho = rho.iter().fold(0.0_f64, |m, r| m.max(*r));
    let cut = floor * max_rho;
    let mut u = vec![0.0; grid.len() * d];
    let mut mask = vec![false; grid.len()];
    for idx in 0..grid.len() {
        if !(rho[idx] > cut) {
            continue;
        }
        let mut ok = true;
        for a in 0..d {
            match grid.neighbours(idx, a) {
                Some((lo, hi)) if rho[lo] > cut && rho[hi] > cut => {
                    u[idx * d + a] = nu * (rho[hi].ln() - rho[lo].ln()) / (2.0 * grid.spacing[a]);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        mask[idx] = ok;
        if !ok {
            u[idx * d..(idx + 1) * d].iter_mut().for_each(|x| *x = 0.0);
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InsufficientData("every node is below the density floor".into()));
    }
    let mut out = rho_estimate.clone();
    out.u = Some(u);
    out.mask = mask;
    Ok(out)
}
