//! Statistics of eigenvalue trajectories: particle tracking, density and
//! Nelson velocity fields, diffusion constants and the scaling analysis.

pub mod calibration;
mod density;
mod diffusion;
mod grid;
mod residuals;
mod scaling;
mod tracking;
mod velocity;

pub use density::{estimate_density, kde_on_grid, samples_at, silverman_bandwidth};
pub use diffusion::{estimate_diffusion, DiffusionEstimate, DiffusionMethod, DiffusionOptions, MIN_WINDOW_LAGS};
pub use grid::{FieldEstimate, Grid};
pub use residuals::{continuity_residual, irrotationality_residual};
pub use scaling::{
    emergent_hbar, irrotationality_of, predicted_diffusion, run_replica, scaled_temperature, scaling_point,
    scaling_sweep, temperature_for, trend_report, ScalingPoint, SweepSettings, TrendReport,
};
pub use tracking::{assign, hungarian, track_particles, EigenTrajectory, OPTIMAL_ASSIGNMENT_LIMIT};
pub use velocity::{
    estimate_current_velocity, estimate_current_velocity_pooled, estimate_osmotic_velocity, MIN_EFFECTIVE_SAMPLES,
};
