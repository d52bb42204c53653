//! Matrix beables: `d` real symmetric `N × N` position matrices with their
//! velocities, the commutator-squared potential, forces, symmetries and the
//! spectral observables built on top of them.

mod jacobi;
mod orthogonal;

pub use jacobi::{joint_diagonalize, joint_diagonalize_from, lex_cmp, JointDiagonalization};
pub use orthogonal::{check_rotation, haar_rotation, transpose};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::sym::{conjugate, matmul_into, SymMatrix};

/// How the potential sums over direction pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSum {
    /// Each `{a, b}` with `a < b` once.
    #[default]
    UnorderedPairs,
    /// Every `(a, b)` with `a ≠ b`; doubles the potential and the forces.
    OrderedPairs,
}

impl PairSum {
    pub fn multiplicity(self) -> f64 {
        match self {
            PairSum::UnorderedPairs => 1.0,
            PairSum::OrderedPairs => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairSum::UnorderedPairs => "unordered_pairs",
            PairSum::OrderedPairs => "ordered_pairs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Number of matrix directions.
    pub d: usize,
    /// Matrix size.
    pub n: usize,
    /// Mass scale (mass · length²).
    pub mu: f64,
    pub omega: f64,
    /// Optional harmonic confinement `κ μ ω² Σ Tr X²`; zero for the pure model.
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub pair_sum: PairSum,
}

impl ModelParams {
    pub fn new(d: usize, n: usize, mu: f64, omega: f64) -> Self {
        Self {
            d,
            n,
            mu,
            omega,
            kappa: 0.0,
            pair_sum: PairSum::UnorderedPairs,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_pair_sum(mut self, pair_sum: PairSum) -> Self {
        self.pair_sum = pair_sum;
        self
    }

    /// `N = 1` is accepted so that single-entry oscillator checks can run
    /// through the same code path.
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(invalid("d", "must be at least 1"));
        }
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(invalid("mu", "must be positive and finite"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", "must be positive and finite"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(invalid("kappa", "must be non-negative and finite"));
        }
        Ok(())
    }

    /// `ε = μ ω²`.
    pub fn energy_scale(&self) -> f64 {
        self.mu * self.omega * self.omega
    }

    /// Independent scalar degrees of freedom, `d · N(N+1)/2`.
    pub fn degrees_of_freedom(&self) -> usize {
        self.d * self.n * (self.n + 1) / 2
    }

    /// Inertia of a diagonal entry in the `½ m q̇²` sense; off-diagonal
    /// entries carry twice this.
    pub fn diagonal_mass(&self) -> f64 {
        2.0 * self.mu
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfiguration {
    pub x: Vec<SymMatrix>,
    pub v: Vec<SymMatrix>,
    pub time: f64,
}

impl MatrixConfiguration {
    pub fn zeros(params: &ModelParams) -> Self {
        Self {
            x: vec![SymMatrix::zeros(params.n); params.d],
            v: vec![SymMatrix::zeros(params.n); params.d],
            time: 0.0,
        }
    }

    /// Commuting configuration with particle `i` at `positions[i]` (a point in `R^d`).
    pub fn from_positions(params: &ModelParams, positions: &[Vec<f64>]) -> Result<Self> {
        if positions.len() != params.n || positions.iter().any(|p| p.len() != params.d) {
            return Err(Error::Shape(format!(
                "expected {} positions of dimension {}",
                params.n, params.d
            )));
        }
        let mut cfg = Self::zeros(params);
        for (a, x) in cfg.x.iter_mut().enumerate() {
            for (i, p) in positions.iter().enumerate() {
                x.set(i, i, p[a]);
            }
        }
        Ok(cfg)
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.x.first().map_or(0, SymMatrix::dim)
    }

    pub fn check_shape(&self, params: &ModelParams) -> Result<()> {
        if self.x.len() != params.d || self.v.len() != params.d {
            return Err(Error::Shape(format!(
                "expected {} directions, got {} positions and {} velocities",
                params.d,
                self.x.len(),
                self.v.len()
            )));
        }
        if self.x.iter().chain(self.v.iter()).any(|m| m.dim() != params.n) {
            return Err(Error::Shape(format!("all matrices must be {0}x{0}", params.n)));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).all(SymMatrix::is_finite) && self.time.is_finite()
    }
}

/// Per-direction eigenvalues, ascending within each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub lambda: Vec<Vec<f64>>,
}

/// Joint-diagonal "particle" positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleFrame {
    /// `positions[i]` is particle `i` in `R^d`, sorted lexicographically.
    pub positions: Vec<Vec<f64>>,
    /// Off-diagonal Frobenius norm left after joint diagonalization.
    pub residual: f64,
    /// Row-major `N × N` rotation with `D_a = O X_a Oᵀ`.
    pub frame: Vec<f64>,
}

/// Scratch buffers for the force kernel.
#[derive(Debug, Clone)]
pub struct ForceWorkspace {
    n: usize,
    dense: Vec<Vec<f64>>,
    p: Vec<f64>,
    c: Vec<f64>,
    q: Vec<f64>,
    acc: Vec<Vec<f64>>,
}

impl ForceWorkspace {
    pub fn new(d: usize, n: usize) -> Self {
        Self {
            n,
            dense: vec![vec![0.0; n * n]; d],
            p: vec![0.0; n * n],
            c: vec![0.0; n * n],
            q: vec![0.0; n * n],
            acc: vec![vec![0.0; n * n]; d],
        }
    }
}

/// Commutator `C = [A, B] = AB − (AB)ᵀ` for symmetric `A`, `B` given dense.
fn commutator_into(a: &[f64], b: &[f64], p: &mut [f64], c: &mut [f64], n: usize) {
    matmul_into(a, b, p, n);
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = p[i * n + j] - p[j * n + i];
        }
    }
}

fn frob_sq(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// Potential energy and, when `forces` is given, `F_a = −∂U/∂X_a`.
///
/// `U = μω² m Σ_{a<b} ‖[X_a, X_b]‖²_F + κμω² Σ_a Tr X_a²` where `m` is the
/// pair multiplicity. Since the commutator of symmetric matrices is
/// antisymmetric, `‖C‖²_F = −Tr(C²)`.
pub fn potential_and_force(
    config: &MatrixConfiguration,
    params: &ModelParams,
    ws: &mut ForceWorkspace,
    forces: Option<&mut [SymMatrix]>,
) -> f64 {
    let d = params.d;
    let n = params.n;
    debug_assert_eq!(ws.n, n);
    let eps = params.energy_scale();
    let mult = params.pair_sum.multiplicity();
    let want_force = forces.is_some();

    for (dense, x) in ws.dense.iter_mut().zip(&config.x) {
        dense.copy_from_slice(&x.to_dense());
    }
    if want_force {
        ws.acc.iter_mut().for_each(|a| a.iter_mut().for_each(|x| *x = 0.0));
    }

    let mut pair_sum = 0.0;
    for a in 0..d {
        for b in (a + 1)..d {
            commutator_into(&ws.dense[a], &ws.dense[b], &mut ws.p, &mut ws.c, n);
            pair_sum += frob_sq(&ws.c);
            if want_force {
                // [X_b, C] = Q + Qᵀ with Q = X_b C, and likewise for X_a.
                matmul_into(&ws.dense[b], &ws.c, &mut ws.q, n);
                let acc = &mut ws.acc[a];
                for i in 0..n {
                    for j in 0..n {
                        acc[i * n + j] += ws.q[i * n + j] + ws.q[j * n + i];
                    }
                }
                matmul_into(&ws.dense[a], &ws.c, &mut ws.q, n);
                let acc = &mut ws.acc[b];
                for i in 0..n {
                    for j in 0..n {
                        acc[i * n + j] -= ws.q[i * n + j] + ws.q[j * n + i];
                    }
                }
            }
        }
    }

    let mut confinement = 0.0;
    if params.kappa > 0.0 {
        confinement = config.x.iter().map(SymMatrix::trace_of_square).sum::<f64>();
    }

    if let Some(out) = forces {
        let pref = 2.0 * eps * mult;
        for a in 0..d {
            let f = &mut out[a];
            let acc = &ws.acc[a];
            for i in 0..n {
                for j in i..n {
                    f.set(i, j, pref * acc[i * n + j]);
                }
            }
            if params.kappa > 0.0 {
                f.axpy(-2.0 * params.kappa * eps, &config.x[a]);
            }
        }
    }

    eps * mult * pair_sum + params.kappa * eps * confinement
}

/// `U ≥ 0`; zero exactly on commuting configurations when `κ = 0`.
pub fn potential_energy(config: &MatrixConfiguration, params: &ModelParams) -> Result<f64> {
    config.check_shape(params)?;
    let mut ws = ForceWorkspace::new(params.d, params.n);
    Ok(potential_and_force(config, params, &mut ws, None))
}

/// `K = μ Σ_a Tr(V_a²)`; off-diagonal velocities count twice.
pub fn kinetic_energy(config: &MatrixConfiguration, params: &ModelParams) -> Result<f64> {
    config.check_shape(params)?;
    Ok(kinetic_unchecked(config, params))
}

pub(crate) fn kinetic_unchecked(config: &MatrixConfiguration, params: &ModelParams) -> f64 {
    params.mu * config.v.iter().map(SymMatrix::trace_of_square).sum::<f64>()
}

pub fn force(config: &MatrixConfiguration, params: &ModelParams) -> Result<Vec<SymMatrix>> {
    config.check_shape(params)?;
    let mut ws = ForceWorkspace::new(params.d, params.n);
    let mut out = vec![SymMatrix::zeros(params.n); params.d];
    potential_and_force(config, params, &mut ws, Some(&mut out));
    Ok(out)
}

pub fn eigenvalues_of(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let dense = nalgebra::DMatrix::from_row_slice(n, n, &m.to_dense());
    let mut ev: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn eigenvalues(config: &MatrixConfiguration) -> Spectrum {
    Spectrum {
        lambda: config.x.iter().map(eigenvalues_of).collect(),
    }
}

/// `X_a → O X_a Oᵀ`, `V_a → O V_a Oᵀ` for a proper rotation `O` (row-major).
pub fn gauge_transform(config: &MatrixConfiguration, o: &[f64]) -> Result<MatrixConfiguration> {
    let n = config.n();
    check_rotation(o, n, 1e-10)?;
    Ok(MatrixConfiguration {
        x: config.x.iter().map(|m| conjugate(m, o)).collect(),
        v: config.v.iter().map(|m| conjugate(m, o)).collect(),
        time: config.time,
    })
}

/// `X_a → X_a + v_a I`.
pub fn translate(config: &MatrixConfiguration, shift: &[f64]) -> Result<MatrixConfiguration> {
    if shift.len() != config.d() {
        return Err(Error::Shape(format!(
            "shift has {} components for {} directions",
            shift.len(),
            config.d()
        )));
    }
    let mut out = config.clone();
    for (x, &s) in out.x.iter_mut().zip(shift) {
        x.add_identity(s);
    }
    Ok(out)
}

/// Momentum conjugate to the trace mode, `p_a = 2μ Tr V_a`.
pub fn com_momentum(config: &MatrixConfiguration, params: &ModelParams) -> Vec<f64> {
    config.v.iter().map(|v| 2.0 * params.mu * v.trace()).collect()
}

/// Gaussian symmetric matrices: variance `spread²` on the diagonal and
/// `spread²/2` per independent off-diagonal entry (the SO(N)-invariant
/// ensemble); velocities zero.
pub fn random_config(params: &ModelParams, spread: f64, seed: u64) -> Result<MatrixConfiguration> {
    params.validate()?;
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(invalid("spread", "must be non-negative and finite"));
    }
    let mut rng = rng::stream(seed, 0, "random_config");
    let mut cfg = MatrixConfiguration::zeros(params);
    let off = spread / 2.0_f64.sqrt();
    for x in &mut cfg.x {
        for i in 0..params.n {
            for j in i..params.n {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.set(i, j, if i == j { spread * z } else { off * z });
            }
        }
    }
    Ok(cfg)
}
