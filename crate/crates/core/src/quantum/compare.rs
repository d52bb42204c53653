use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMetric {
    /// `∫ |ρ_a − ρ_b|`.
    L1,
    /// `sup |F_a − F_b|`, one-dimensional only.
    Ks,
}

/// Distance between two densities sampled on the same grid.
///
/// KS uses trapezoidal CDFs so smooth densities give the continuum value to
/// second order in the spacing.
pub fn compare_densities(grid: &Grid, rho_a: &[f64], rho_b: &[f64], metric: DensityMetric) -> Result<f64> {
    if rho_a.len() != grid.len() || rho_b.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "densities of length {} and {} on a grid of {}",
            rho_a.len(),
            rho_b.len(),
            grid.len()
        )));
    }
    match metric {
        DensityMetric::L1 => Ok(rho_a.iter().zip(rho_b).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.cell_volume()),
        DensityMetric::Ks => {
            if grid.dim() != 1 {
                return Err(invalid("metric", "KS distance is defined for one dimension only"));
            }
            let h = grid.spacing[0];
            let (mut fa, mut fb, mut best) = (0.0, 0.0, 0.0_f64);
            for i in 1..rho_a.len() {
                fa += 0.5 * h * (rho_a[i - 1] + rho_a[i]);
                fb += 0.5 * h * (rho_b[i - 1] + rho_b[i]);
                best = best.max((fa - fb).abs());
            }
            Ok(best)
        }
    }
}

/// Histogram bins: `count` cells of width `width` starting at `lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub lower: f64,
    pub width: f64,
    pub count: usize,
}

impl Bins {
    /// Bins made of `factor` consecutive node cells of a 1D grid, each node
    /// cell being `[x_i − h/2, x_i + h/2)`.
    pub fn coarsening(grid: &Grid, factor: usize) -> Result<Self> {
        if grid.dim() != 1 || factor == 0 {
            return Err(invalid("factor", "needs a 1D grid and a positive factor"));
        }
        let h = grid.spacing[0];
        Ok(Self {
            lower: grid.lower[0] - 0.5 * h,
            width: factor as f64 * h,
            count: grid.len() / factor,
        })
    }

    pub fn center(&self, j: usize) -> f64 {
        self.lower + (j as f64 + 0.5) * self.width
    }
}

/// Fraction of samples per bin divided by the bin width. Samples outside the
/// bins still count toward the total.
pub fn histogram_density(samples: &[f64], bins: &Bins) -> Vec<f64> {
    let mut out = vec![0.0; bins.count];
    for x in samples {
        let j = ((x - bins.lower) / bins.width).floor();
        if j >= 0.0 && (j as usize) < bins.count {
            out[j as usize] += 1.0;
        }
    }
    let scale = 1.0 / (samples.len().max(1) as f64 * bins.width);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Averages a node density over bins from [`Bins::coarsening`].
pub fn coarsen_density(rho: &[f64], factor: usize, bins: &Bins) -> Vec<f64> {
    (0..bins.count)
        .map(|j| rho[j * factor..(j + 1) * factor].iter().sum::<f64>() / factor as f64)
        .collect()
}

/// Binned L1 distance between walker positions and a node density.
pub fn samples_vs_density_l1(samples: &[f64], grid: &Grid, rho: &[f64], factor: usize) -> Result<f64> {
    let bins = Bins::coarsening(grid, factor)?;
    let hist = histogram_density(samples, &bins);
    let reference = coarsen_density(rho, factor, &bins);
    let inside: f64 = hist.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>() * bins.width;
    // mass outside the bins on either side
    let hist_mass: f64 = hist.iter().sum::<f64>() * bins.width;
    let ref_mass: f64 = reference.iter().sum::<f64>() * bins.width;
    Ok(inside + (1.0 - hist_mass).abs() + (ref_mass - rho.iter().sum::<f64>() * grid.spacing[0]).abs())
}
