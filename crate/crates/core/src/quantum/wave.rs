use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::fft::{wavenumbers, Fft};
use crate::error::{invalid, Error, Result};
use crate::estimators::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Period `n·h`; split-step spectral propagation, `n` a power of two.
    Periodic,
    /// `ψ = 0` one spacing beyond either end node; Crank–Nicolson.
    Dirichlet,
}

/// One-dimensional wavefunction on a uniform lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction {
    pub grid: Grid,
    pub psi: Vec<Complex64>,
    pub hbar: f64,
    pub mass: f64,
    pub time: f64,
    pub boundary: Boundary,
}

impl WaveFunction {
    /// Wraps amplitudes and normalizes them to `Σ|ψ|² h = 1`.
    pub fn new(grid: Grid, psi: Vec<Complex64>, hbar: f64, mass: f64, boundary: Boundary) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::GridMismatch(
                "wavefunctions live on one-dimensional grids".into(),
            ));
        }
        if psi.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} amplitudes on a grid of {}",
                psi.len(),
                grid.len()
            )));
        }
        if !(hbar > 0.0) || !(mass > 0.0) {
            return Err(invalid("hbar", "hbar and mass must be positive"));
        }
        if boundary == Boundary::Periodic && !grid.len().is_power_of_two() {
            return Err(invalid("grid", "periodic grids need a power-of-two node count"));
        }
        let mut wf = Self {
            grid,
            psi,
            hbar,
            mass,
            time: 0.0,
            boundary,
        };
        wf.normalize()?;
        Ok(wf)
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing[0]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.lower[0] + i as f64 * self.grid.spacing[0]
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("wavefunction vanishes everywhere".into()));
        }
        let s = 1.0 / n.sqrt();
        for z in self.psi.iter_mut() {
            *z *= s;
        }
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Mean and variance of `|ψ|²`.
    pub fn moments(&self) -> (f64, f64) {
        let h = self.spacing();
        let rho = self.density();
        let mean: f64 = rho.iter().enumerate().map(|(i, r)| r * self.x(i)).sum::<f64>() * h;
        let var: f64 = rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * (self.x(i) - mean) * (self.x(i) - mean))
            .sum::<f64>()
            * h;
        (mean, var)
    }

    /// Extent of the periodic cell (`n h`) or of the Dirichlet box (`(n+1) h`).
    pub fn length(&self) -> f64 {
        let n = self.grid.len() as f64;
        match self.boundary {
            Boundary::Periodic => n * self.spacing(),
            Boundary::Dirichlet => (n + 1.0) * self.spacing(),
        }
    }
}

/// Grid of `n` nodes `lower + k L/n`, `k < n`, for a periodic cell of length `L`.
pub fn periodic_grid(lower: f64, length: f64, n: usize) -> Result<Grid> {
    if !(length > 0.0) || n < 2 {
        return Err(invalid("length", "need a positive length and at least two nodes"));
    }
    Ok(Grid {
        lower: vec![lower],
        spacing: vec![length / n as f64],
        counts: vec![n],
    })
}

/// Gaussian packet with `|ψ|²` of mean `x0`, standard deviation `sigma0`,
/// and mean momentum `p0`.
pub fn gaussian_packet(
    grid: Grid,
    x0: f64,
    sigma0: f64,
    p0: f64,
    hbar: f64,
    mass: f64,
    boundary: Boundary,
) -> Result<WaveFunction> {
    if !(sigma0 > 0.0) {
        return Err(invalid("sigma0", "must be positive"));
    }
    let psi = (0..grid.len())
        .map(|i| {
            let x = grid.lower[0] + i as f64 * grid.spacing[0];
            let z = x - x0;
            Complex64::from_polar((-z * z / (4.0 * sigma0 * sigma0)).exp(), p0 * x / hbar)
        })
        .collect();
    WaveFunction::new(grid, psi, hbar, mass, boundary)
}

/// Harmonic oscillator eigenstate `level ∈ {0, 1}` for `V = ½ μ ω₀² x²`.
pub fn harmonic_state(
    grid: Grid,
    level: usize,
    omega0: f64,
    hbar: f64,
    mass: f64,
    boundary: Boundary,
) -> Result<WaveFunction> {
    if level > 1 {
        return Err(invalid("level", "only the two lowest states are provided"));
    }
    let a = mass * omega0 / hbar;
    let psi = (0..grid.len())
        .map(|i| {
            let x = grid.lower[0] + i as f64 * grid.spacing[0];
            let g = (-0.5 * a * x * x).exp();
            Complex64::new(if level == 0 { g } else { x * g }, 0.0)
        })
        .collect();
    WaveFunction::new(grid, psi, hbar, mass, boundary)
}

/// `V(x) = ½ μ ω₀² x²` on the nodes of `grid`.
pub fn harmonic_potential(grid: &Grid, mass: f64, omega0: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.lower[0] + i as f64 * grid.spacing[0];
            0.5 * mass * omega0 * omega0 * x * x
        })
        .collect()
}

/// Threshold on `dt · E_max / ħ` beyond which results carry an accuracy warning.
pub const ACCURACY_LIMIT: f64 = 0.1;

/// Fraction of the half box the three-sigma half-width may reach.
pub const WIDTH_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// `dt · E_max / ħ` for the grid, potential and step.
    pub phase_per_step: f64,
    pub accuracy_warning: bool,
    pub steps: u64,
    /// `|∫|ψ|² − 1|` after the last step.
    pub norm_drift: f64,
}

#[derive(Debug, Clone)]
enum Scheme {
    SplitStep {
        fft: Fft,
        half_potential: Vec<Complex64>,
        kinetic: Vec<Complex64>,
    },
    CrankNicolson {
        /// Off-diagonal of `A = 1 + i dt H / 2ħ` (constant).
        off: Complex64,
        diag_b: Vec<Complex64>,
        off_b: Complex64,
        /// Thomas factors for `A`.
        c_prime: Vec<Complex64>,
        inv_denom: Vec<Complex64>,
        /// Exact phase of the potential minimum, kept out of the Cayley form.
        offset_phase: Complex64,
    },
}

/// Reusable propagator for a fixed grid, potential and step.
#[derive(Debug, Clone)]
pub struct Propagator {
    scheme: Scheme,
    dt: f64,
    report: SolverReport,
    scratch: Vec<Complex64>,
    monitor_width: bool,
}

impl Propagator {
    pub fn new(psi: &WaveFunction, potential: &[f64], dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", "must be positive and finite"));
        }
        let n = psi.grid.len();
        if potential.len() != n {
            return Err(Error::Shape(format!(
                "potential has {} values for {n} nodes",
                potential.len()
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "must be finite and real"));
        }
        let (hbar, m, h) = (psi.hbar, psi.mass, psi.spacing());
        let v_max = potential.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let kinetic_max = hbar * hbar * (core::f64::consts::PI / h).powi(2) / (2.0 * m);
        let phase_per_step = dt * (kinetic_max + v_max) / hbar;

        let scheme = match psi.boundary {
            Boundary::Periodic => {
                let fft = Fft::new(n)?;
                let half_potential = potential
                    .iter()
                    .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar))
                    .collect();
                let kinetic = wavenumbers(n, h)
                    .iter()
                    .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * m)))
                    .collect();
                Scheme::SplitStep {
                    fft,
                    half_potential,
                    kinetic,
                }
            }
            Boundary::Dirichlet => {
                // H = −ħ²/(2m) Δ_h + V, Δ_h the three-point Laplacian
                let t = hbar * hbar / (2.0 * m * h * h);
                let i_half = Complex64::new(0.0, 0.5 * dt / hbar);
                let v0 = potential.iter().fold(f64::INFINITY, |a, v| a.min(*v));
                let diag_a: Vec<Complex64> = potential.iter().map(|v| 1.0 + i_half * (2.0 * t + v - v0)).collect();
                let diag_b = potential.iter().map(|v| 1.0 - i_half * (2.0 * t + v - v0)).collect();
                let off = -i_half * t;
                let off_b = i_half * t;
                let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
                let mut inv_denom = vec![Complex64::new(0.0, 0.0); n];
                let mut prev = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let denom = diag_a[i] - off * prev;
                    inv_denom[i] = 1.0 / denom;
                    c_prime[i] = off * inv_denom[i];
                    prev = c_prime[i];
                }
                Scheme::CrankNicolson {
                    off,
                    diag_b,
                    off_b,
                    c_prime,
                    inv_denom,
                    offset_phase: Complex64::from_polar(1.0, -v0 * dt / hbar),
                }
            }
        };
        Ok(Self {
            scheme,
            dt,
            report: SolverReport {
                phase_per_step,
                accuracy_warning: phase_per_step > ACCURACY_LIMIT,
                steps: 0,
                norm_drift: 0.0,
            },
            scratch: vec![Complex64::new(0.0, 0.0); n],
            monitor_width: true,
        })
    }

    /// Disables the packet-width abort (for states that legitimately fill the box).
    pub fn without_width_monitor(mut self) -> Self {
        self.monitor_width = false;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn report(&self) -> SolverReport {
        self.report
    }

    /// Advances `psi` by one step.
    pub fn step(&mut self, psi: &mut WaveFunction) -> Result<()> {
        match &self.scheme {
            Scheme::SplitStep {
                fft,
                half_potential,
                kinetic,
            } => {
                for (z, p) in psi.psi.iter_mut().zip(half_potential) {
                    *z *= p;
                }
                fft.forward(&mut psi.psi);
                for (z, k) in psi.psi.iter_mut().zip(kinetic) {
                    *z *= k;
                }
                fft.inverse(&mut psi.psi);
                for (z, p) in psi.psi.iter_mut().zip(half_potential) {
                    *z *= p;
                }
            }
            Scheme::CrankNicolson {
                off,
                diag_b,
                off_b,
                c_prime,
                inv_denom,
                offset_phase,
            } => {
                let n = psi.psi.len();
                let rhs = &mut self.scratch;
                for i in 0..n {
                    let mut r = diag_b[i] * psi.psi[i];
                    if i > 0 {
                        r += off_b * psi.psi[i - 1];
                    }
                    if i + 1 < n {
                        r += off_b * psi.psi[i + 1];
                    }
                    rhs[i] = r;
                }
                // forward sweep, then back substitution
                let mut prev = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    prev = (rhs[i] - off * prev) * inv_denom[i];
                    rhs[i] = prev;
                }
                psi.psi[n - 1] = rhs[n - 1];
                for i in (0..n - 1).rev() {
                    psi.psi[i] = rhs[i] - c_prime[i] * psi.psi[i + 1];
                }
                for z in psi.psi.iter_mut() {
                    *z *= offset_phase;
                }
            }
        }
        psi.time += self.dt;
        self.report.steps += 1;
        if psi.psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NumericAbort {
                step: self.report.steps,
                energy: f64::NAN,
            });
        }
        if self.monitor_width {
            let (_, var) = psi.moments();
            let width = 3.0 * var.sqrt();
            let limit = WIDTH_FRACTION * 0.5 * psi.length();
            if width > limit {
                return Err(Error::WidthExceeded {
                    step: self.report.steps,
                    width,
                    limit,
                });
            }
        }
        self.report.norm_drift = (psi.norm() - 1.0).abs();
        Ok(())
    }
}

/// Evolves `psi` under `iħ ∂_t ψ = [−ħ²/(2μ) ∂² + V] ψ` for `steps` steps.
///
/// Periodic grids use second-order split-step Fourier, Dirichlet grids
/// Crank–Nicolson; both are unitary. The report flags `dt E_max / ħ > 0.1`.
pub fn evolve_schrodinger(
    psi: &WaveFunction,
    potential: &[f64],
    dt: f64,
    steps: u64,
) -> Result<(WaveFunction, SolverReport)> {
    let mut prop = Propagator::new(psi, potential, dt)?;
    let mut out = psi.clone();
    for _ in 0..steps {
        prop.step(&mut out)?;
    }
    let mut report = prop.report();
    report.norm_drift = (out.norm() - 1.0).abs();
    Ok((out, report))
}

/// `ψ → e^{i E t_now / ħ} ψ`.
pub fn phase_renormalize(psi: &WaveFunction, energy: f64, t_now: f64) -> WaveFunction {
    let phase = Complex64::from_polar(1.0, energy * t_now / psi.hbar);
    let mut out = psi.clone();
    for z in out.psi.iter_mut() {
        *z *= phase;
    }
    out
}
