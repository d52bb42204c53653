use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Rectangular lattice of nodes `lower[a] + k·spacing[a]`, `k < counts[a]`.
/// Node index is row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    /// `counts[a]` nodes spanning `[lower[a], upper[a]]` inclusive.
    pub fn uniform(lower: &[f64], upper: &[f64], counts: &[usize]) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != counts.len() || lower.is_empty() {
            return Err(Error::Shape(
                "grid bounds and counts must share a non-zero length".into(),
            ));
        }
        let mut spacing = Vec::with_capacity(lower.len());
        for a in 0..lower.len() {
            if counts[a] < 2 || !(upper[a] > lower[a]) {
                return Err(invalid(
                    "grid",
                    format!("axis {a} needs upper > lower and at least 2 nodes"),
                ));
            }
            spacing.push((upper[a] - lower[a]) / (counts[a] - 1) as f64);
        }
        Ok(Self {
            lower: lower.to_vec(),
            spacing,
            counts: counts.to_vec(),
        })
    }

    /// One-dimensional helper.
    pub fn line(lower: f64, upper: f64, count: usize) -> Result<Self> {
        Self::uniform(&[lower], &[upper], &[count])
    }

    /// Box around `points` (flattened, dimension `d`) padded by `margin` on each side.
    pub fn covering(points: &[f64], d: usize, margin: f64, counts: &[usize]) -> Result<Self> {
        if d == 0 || points.is_empty() || !points.len().is_multiple_of(d) {
            return Err(Error::InsufficientData("no points to cover".into()));
        }
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points.chunks_exact(d) {
            for a in 0..d {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        for a in 0..d {
            lo[a] -= margin;
            hi[a] += margin;
            if hi[a] <= lo[a] {
                hi[a] = lo[a] + 1.0;
            }
        }
        Self::uniform(&lo, &hi, counts)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn axis(&self, a: usize) -> Vec<f64> {
        (0..self.counts[a])
            .map(|k| self.lower[a] + k as f64 * self.spacing[a])
            .collect()
    }

    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = index % self.counts[a];
            index /= self.counts[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.counts).fold(0, |acc, (&k, &c)| acc * c + k)
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.unravel(index)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.lower[a] + k as f64 * self.spacing[a])
            .collect()
    }

    /// Flat stride of axis `a`.
    pub fn stride(&self, a: usize) -> usize {
        self.counts[a + 1..].iter().product()
    }

    /// Neighbour indices `(minus, plus)` along `a`, if both exist.
    pub fn neighbours(&self, index: usize, a: usize) -> Option<(usize, usize)> {
        let k = (index / self.stride(a)) % self.counts[a];
        if k == 0 || k + 1 >= self.counts[a] {
            return None;
        }
        let s = self.stride(a);
        Some((index - s, index + s))
    }

    pub fn is_interior(&self, index: usize) -> bool {
        (0..self.dim()).all(|a| self.neighbours(index, a).is_some())
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.counts, self.spacing, other.counts, other.spacing
            )));
        }
        Ok(())
    }
}

/// Gridded density and, when estimated, current and osmotic velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEstimate {
    pub grid: Grid,
    /// Normalized so that `Σ rho · cell_volume = 1`.
    pub rho: Vec<f64>,
    /// Current velocity, `d` components per node.
    pub v: Option<Vec<f64>>,
    /// Standard error of `v`, same layout.
    pub v_stderr: Option<Vec<f64>>,
    /// Osmotic velocity, `d` components per node.
    pub u: Option<Vec<f64>>,
    /// Nodes where the velocity fields are defined.
    pub mask: Vec<bool>,
    pub bandwidth: f64,
    pub n_samples: usize,
}

impl FieldEstimate {
    /// Wraps a density, renormalizing it on the grid.
    pub fn from_density(grid: Grid, mut rho: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values on a grid of {}",
                rho.len(),
                grid.len()
            )));
        }
        if rho.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Domain("density must be non-negative".into()));
        }
        normalize(&mut rho, grid.cell_volume())?;
        let mask = vec![true; grid.len()];
        Ok(Self {
            grid,
            rho,
            v: None,
            v_stderr: None,
            u: None,
            mask,
            bandwidth: 0.0,
            n_samples: 0,
        })
    }

    /// Attaches a current velocity field defined everywhere.
    pub fn with_velocity(mut self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.grid.len() * self.grid.dim() {
            return Err(Error::Shape("velocity needs d components per node".into()));
        }
        self.v = Some(v);
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

pub(crate) fn normalize(rho: &mut [f64], cell_volume: f64) -> Result<()> {
    let total: f64 = rho.iter().sum::<f64>() * cell_volume;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InsufficientData("density has no mass on the grid".into()));
    }
    for r in rho.iter_mut() {
        *r /= total;
    }
    Ok(())
}
