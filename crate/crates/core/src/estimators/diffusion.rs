use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::tracking::EigenTrajectory;
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMethod {
    MsdSlope,
    QuadraticVariation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionOptions {
    pub method: DiffusionMethod,
    /// `(τ_min, τ_max)`; defaults to five and fifty recording intervals.
    pub fit_window: Option<(f64, f64)>,
    /// Subtract the ensemble-mean displacement before squaring.
    pub remove_drift: bool,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        Self {
            method: DiffusionMethod::MsdSlope,
            fit_window: None,
            remove_drift: true,
            bootstrap_resamples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    pub nu_hat: f64,
    pub stderr: f64,
    pub fit_window: (f64, f64),
    pub method: DiffusionMethod,
    /// Per-direction estimates; their spread is the anisotropy diagnostic.
    pub per_direction: Vec<f64>,
}

/// Minimum number of lags inside an MSD fit window.
pub const MIN_WINDOW_LAGS: usize = 5;

/// Diffusion constant per scalar coordinate, averaged over particles,
/// directions and replicas.
///
/// `MsdSlope` fits `⟨Δλ²⟩ = 2ν̂τ` through the origin over the window;
/// `QuadraticVariation` uses single-interval increments. The error bar is a
/// bootstrap over replicas.
pub fn estimate_diffusion(trajectories: &[EigenTrajectory], opts: &DiffusionOptions) -> Result<DiffusionEstimate> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
    let (n, d, frames) = (first.n, first.d, first.frames());
    if trajectories
        .iter()
        .any(|t| t.n != n || t.d != d || t.frames() != frames)
    {
        return Err(Error::Shape("trajectories must share N, d and frame count".into()));
    }
    if frames < 2 {
        return Err(Error::InsufficientData("need at least two frames".into()));
    }
    let dt = (first.times[frames - 1] - first.times[0]) / (frames - 1) as f64;
    if !(dt > 0.0) {
        return Err(invalid("times", "must be strictly increasing"));
    }
    for w in first.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(invalid("times", "recording interval must be uniform"));
        }
    }

    let lags: Vec<usize> = match opts.method {
        DiffusionMethod::QuadraticVariation => vec![1],
        DiffusionMethod::MsdSlope => {
            let (lo, hi) = opts.fit_window.unwrap_or((5.0 * dt, 50.0 * dt));
            let k_lo = ((lo / dt).round() as usize).max(1);
            let k_hi = (hi / dt).round() as usize;
            if k_hi < k_lo || k_hi - k_lo + 1 < MIN_WINDOW_LAGS {
                return Err(invalid(
                    "fit_window",
                    format!("needs at least {MIN_WINDOW_LAGS} recorded lags, got [{k_lo}, {k_hi}]"),
                ));
            }
            if k_hi >= frames {
                return Err(invalid(
                    "fit_window",
                    format!("lag {k_hi} exceeds the {frames} recorded frames"),
                ));
            }
            (k_lo..=k_hi).collect()
        }
    };

    let replicas = trajectories.len();
    let members = (replicas * n) as f64;
    if opts.remove_drift && members < 2.0 {
        return Err(Error::InsufficientData(
            "drift removal needs at least two particle paths".into(),
        ));
    }
    // Subtracting the sample mean of M displacements removes a 1/M share of
    // their variance.
    let drift_correction = if opts.remove_drift {
        members / (members - 1.0)
    } else {
        1.0
    };

    // sums[r][lag][a] = Σ over origins and particles of squared displacement
    let nl = lags.len();
    let mut sums = vec![0.0; replicas * nl * d];
    let mut counts = vec![0.0; nl];
    let mut mean = vec![0.0; d];
    for (li, &k) in lags.iter().enumerate() {
        for origin in 0..frames - k {
            if opts.remove_drift {
                mean.iter_mut().for_each(|m| *m = 0.0);
                for t in trajectories {
                    for i in 0..n {
                        for a in 0..d {
                            mean[a] += t.coord(origin + k, i, a) - t.coord(origin, i, a);
                        }
                    }
                }
                mean.iter_mut().for_each(|m| *m /= members);
            }
            for (r, t) in trajectories.iter().enumerate() {
                let base = (r * nl + li) * d;
                for i in 0..n {
                    for a in 0..d {
                        let delta = t.coord(origin + k, i, a) - t.coord(origin, i, a) - mean[a];
                        sums[base + a] += delta * delta;
                    }
                }
            }
            counts[li] += n as f64;
        }
    }

    let taus: Vec<f64> = lags.iter().map(|&k| k as f64 * dt).collect();
    let estimate_for = |weights: &[f64], axis: Option<usize>| -> f64 {
        let total_w: f64 = weights.iter().sum();
        let axes: Vec<usize> = match axis {
            Some(a) => vec![a],
            None => (0..d).collect(),
        };
        let mut slopes = 0.0;
        for &a in &axes {
            let msd: Vec<f64> = (0..nl)
                .map(|li| {
                    let s: f64 = (0..replicas).map(|r| weights[r] * sums[(r * nl + li) * d + a]).sum();
                    drift_correction * s / (counts[li] * total_w)
                })
                .collect();
            let num: f64 = taus.iter().zip(&msd).map(|(t, m)| t * m).sum();
            let den: f64 = taus.iter().map(|t| t * t).sum();
            slopes += num / den;
        }
        (slopes / axes.len() as f64 / 2.0).max(0.0)
    };

    let ones = vec![1.0; replicas];
    let nu_hat = estimate_for(&ones, None);
    let per_direction = (0..d).map(|a| estimate_for(&ones, Some(a))).collect();

    let mut r = rng::stream(opts.seed, 0, "diffusion-bootstrap");
    let mut w = vec![0.0; replicas];
    let stderr = stats::bootstrap_stderr(replicas, opts.bootstrap_resamples, &mut r, |idx| {
        w.iter_mut().for_each(|x| *x = 0.0);
        for &i in idx {
            w[i] += 1.0;
        }
        estimate_for(&w, None)
    });

    Ok(DiffusionEstimate {
        nu_hat,
        stderr,
        fit_window: (taus[0], taus[nl - 1]),
        method: opts.method,
        per_direction,
    })
}
