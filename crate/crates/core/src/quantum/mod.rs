//! Single-particle quantum reference: Schrödinger propagation, the Madelung
//! pair, Nelson's stochastic walkers and density comparisons.

mod compare;
mod fft;
mod madelung;
mod nelson;
mod wave;

pub use compare::{coarsen_density, compare_densities, histogram_density, samples_vs_density_l1, Bins, DensityMetric};
pub use fft::{wavenumbers, Fft};
pub use madelung::{build_wavefunction, madelung_decompose, MadelungPair, DEFAULT_DENSITY_FLOOR};
pub use nelson::{
    nelson_drift, nelson_drift_from_psi, nelson_evolve, CoEvolvedDrift, DriftField, DriftSource, FrozenDrift,
    NelsonEnsemble,
};
pub use wave::{
    evolve_schrodinger, gaussian_packet, harmonic_potential, harmonic_state, periodic_grid, phase_renormalize,
    Boundary, Propagator, SolverReport, WaveFunction, ACCURACY_LIMIT, WIDTH_FRACTION,
};

/// Free-packet width `σ(t) = σ₀ √(1 + (ħ t / (2 μ σ₀²))²)`.
pub fn free_packet_width(sigma0: f64, hbar: f64, mass: f64, t: f64) -> f64 {
    use num_traits::Float;
    let r = hbar * t / (2.0 * mass * sigma0 * sigma0);
    sigma0 * (1.0 + r * r).sqrt()
}

/// Nelson diffusion constant under the two readings of `ħ = μ ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuConvention {
    /// `ν = ħ / μ`, the literal identification.
    HbarOverMu,
    /// `ν = ħ / (2μ)`, Nelson's normalization.
    HbarOverTwoMu,
}

impl NuConvention {
    pub fn nu(self, hbar: f64, mass: f64) -> f64 {
        match self {
            Self::HbarOverMu => hbar / mass,
            Self::HbarOverTwoMu => hbar / (2.0 * mass),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HbarOverMu => "hbar_over_mu",
            Self::HbarOverTwoMu => "hbar_over_two_mu",
        }
    }
}

#[cfg(test)]
mod tests;
