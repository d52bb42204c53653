//! Identity tracking of eigenvalue particles between recorded frames.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::matrix::ParticleFrame;

/// Above this size tracking switches from optimal assignment to greedy matching.
pub const OPTIMAL_ASSIGNMENT_LIMIT: usize = 64;

/// Time-indexed particle positions with a consistent particle identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTrajectory {
    pub times: Vec<f64>,
    pub n: usize,
    pub d: usize,
    /// Frame-major: frame `f`, particle `i`, direction `a` at `(f·n + i)·d + a`.
    pub positions: Vec<f64>,
    pub residuals: Vec<f64>,
    pub replica_id: u64,
}

impl EigenTrajectory {
    /// Builds a trajectory from already-matched positions.
    pub fn from_positions(times: Vec<f64>, n: usize, d: usize, positions: Vec<f64>, replica_id: u64) -> Result<Self> {
        if positions.len() != times.len() * n * d {
            return Err(Error::Shape(format!(
                "{} positions for {} frames of {n}x{d}",
                positions.len(),
                times.len()
            )));
        }
        let residuals = vec![0.0; times.len()];
        Ok(Self {
            times,
            n,
            d,
            positions,
            residuals,
            replica_id,
        })
    }

    pub fn frames(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn position(&self, frame: usize, particle: usize) -> &[f64] {
        let start = (frame * self.n + particle) * self.d;
        &self.positions[start..start + self.d]
    }

    #[inline]
    pub fn coord(&self, frame: usize, particle: usize, axis: usize) -> f64 {
        self.positions[(frame * self.n + particle) * self.d + axis]
    }

    pub fn frame_slice(&self, frame: usize) -> &[f64] {
        let w = self.n * self.d;
        &self.positions[frame * w..(frame + 1) * w]
    }

    /// Index of the recorded frame closest to `t`.
    pub fn nearest_frame(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }

    /// Removes the per-frame centre of mass (the trace mode of each matrix).
    pub fn subtract_center_of_mass(&mut self) {
        let (n, d) = (self.n, self.d);
        for chunk in self.positions.chunks_exact_mut(n * d) {
            for a in 0..d {
                let com = (0..n).map(|i| chunk[i * d + a]).sum::<f64>() / n as f64;
                for i in 0..n {
                    chunk[i * d + a] -= com;
                }
            }
        }
    }

    /// Tracks the joint-diagonal frames stored in a record.
    pub fn from_record(record: &TrajectoryRecord, replica_id: u64) -> Result<Self> {
        let mut times = Vec::new();
        let mut frames = Vec::new();
        for (t, f) in record.times.iter().zip(&record.frames) {
            if let Some(f) = f {
                times.push(*t);
                frames.push(f.clone());
            }
        }
        if frames.is_empty() {
            return Err(Error::InsufficientData("record carries no particle frames".into()));
        }
        let mut traj = track_particles(&frames, &times)?;
        traj.replica_id = replica_id;
        Ok(traj)
    }
}

/// Frame-to-frame assignment minimizing the total squared displacement.
///
/// Optimal (shortest augmenting path) up to [`OPTIMAL_ASSIGNMENT_LIMIT`]
/// particles, greedy nearest-pair above, never worse than keeping the raw order.
pub fn track_particles(frames: &[ParticleFrame], times: &[f64]) -> Result<EigenTrajectory> {
    if frames.len() != times.len() {
        return Err(Error::Shape(format!(
            "{} frames but {} times",
            frames.len(),
            times.len()
        )));
    }
    let Some(first) = frames.first() else {
        return Err(Error::InsufficientData("no frames".into()));
    };
    let n = first.positions.len();
    let d = first.positions.first().map_or(0, Vec::len);
    for (k, f) in frames.iter().enumerate() {
        if f.positions.len() != n || f.positions.iter().any(|p| p.len() != d) {
            return Err(Error::Shape(format!("frame {k} does not hold {n} points in R^{d}")));
        }
    }

    let mut positions = Vec::with_capacity(frames.len() * n * d);
    for p in &first.positions {
        positions.extend_from_slice(p);
    }
    let mut cost = vec![0.0; n * n];
    for f in &frames[1..] {
        let prev_start = positions.len() - n * d;
        let prev: Vec<f64> = positions[prev_start..].to_vec();
        for i in 0..n {
            for j in 0..n {
                cost[i * n + j] = prev[i * d..(i + 1) * d]
                    .iter()
                    .zip(&f.positions[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        }
        let assignment = assign(&cost, n);
        for &j in &assignment {
            positions.extend_from_slice(&f.positions[j]);
        }
    }
    Ok(EigenTrajectory {
        times: times.to_vec(),
        n,
        d,
        positions,
        residuals: frames.iter().map(|f| f.residual).collect(),
        replica_id: 0,
    })
}

fn total_cost(cost: &[f64], n: usize, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

/// `result[i]` = column assigned to row `i`.
pub fn assign(cost: &[f64], n: usize) -> Vec<usize> {
    let identity: Vec<usize> = (0..n).collect();
    let candidate = if n <= OPTIMAL_ASSIGNMENT_LIMIT {
        hungarian(cost, n)
    } else {
        greedy(cost, n)
    };
    if total_cost(cost, n, &candidate) <= total_cost(cost, n, &identity) {
        candidate
    } else {
        identity
    }
}

/// Shortest augmenting path assignment with row/column potentials, `O(n³)`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

fn greedy(cost: &[f64], n: usize) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pairs.push((cost[i * n + j], i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_taken = vec![false; n];
    let mut col_taken = vec![false; n];
    let mut result = vec![usize::MAX; n];
    for (_, i, j) in pairs {
        if !row_taken[i] && !col_taken[j] {
            row_taken[i] = true;
            col_taken[j] = true;
            result[i] = j;
        }
    }
    result
}
