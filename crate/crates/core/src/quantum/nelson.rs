use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::madelung::{madelung_decompose, MadelungPair, DEFAULT_DENSITY_FLOOR};
use super::wave::{Boundary, Propagator, WaveFunction};
use crate::error::{invalid, Error, Result};
use crate::estimators::Grid;
use crate::rng;

/// Nelson forward drift `b = ∇S/μ + ν ∇ln ρ` on grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftField {
    pub grid: Grid,
    pub b: Vec<f64>,
    /// Nodes where the drift was computed; others hold the nearest computed value.
    pub mask: Vec<bool>,
}

impl DriftField {
    /// Linear interpolation, constant beyond the end nodes.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.b.len();
        let s = (x - self.grid.lower[0]) / self.grid.spacing[0];
        if s <= 0.0 {
            return self.b[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= n {
            return self.b[n - 1];
        }
        let f = s - i as f64;
        self.b[i] * (1.0 - f) + self.b[i + 1] * f
    }
}

/// Forward drift from a Madelung pair. Phase differences are wrapped to one
/// branch so periodic plane waves come out uniform.
pub fn nelson_drift(m: &MadelungPair, mass: f64, nu: f64) -> Result<DriftField> {
    if !(mass > 0.0) || !(nu >= 0.0) {
        return Err(invalid("nu", "mass must be positive and nu non-negative"));
    }
    let n = m.rho.len();
    let h = m.grid.spacing[0];
    let periodic = m.boundary == Boundary::Periodic;
    let period_s = 2.0 * core::f64::consts::PI * m.hbar;
    let mut b = vec![0.0; n];
    let mut ok = vec![false; n];
    for i in 0..n {
        let (lo, hi) = if periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 || i + 1 == n {
            continue;
        } else {
            (i - 1, i + 1)
        };
        if !(m.mask[i] && m.mask[lo] && m.mask[hi]) || m.rho[lo] <= 0.0 || m.rho[hi] <= 0.0 {
            continue;
        }
        let mut ds = m.s[hi] - m.s[lo];
        ds -= period_s * (ds / period_s).round();
        let v = ds / (2.0 * h * mass);
        let u = if nu > 0.0 {
            nu * (m.rho[hi].ln() - m.rho[lo].ln()) / (2.0 * h)
        } else {
            0.0
        };
        b[i] = v + u;
        ok[i] = true;
    }
    if !ok.iter().any(|x| *x) {
        return Err(Error::InsufficientData("no node has a defined drift".into()));
    }
    fill_nearest(&mut b, &ok);
    Ok(DriftField {
        grid: m.grid.clone(),
        b,
        mask: ok,
    })
}

/// Copies the nearest defined value into undefined slots.
fn fill_nearest(values: &mut [f64], defined: &[bool]) {
    let n = values.len();
    let mut dist = vec![usize::MAX; n];
    let mut src = vec![0usize; n];
    let mut last: Option<usize> = None;
    for i in 0..n {
        if defined[i] {
            last = Some(i);
        }
        if let Some(j) = last {
            dist[i] = i - j;
            src[i] = j;
        }
    }
    last = None;
    for i in (0..n).rev() {
        if defined[i] {
            last = Some(i);
        }
        if let Some(j) = last {
            if j - i < dist[i] {
                dist[i] = j - i;
                src[i] = j;
            }
        }
    }
    for i in 0..n {
        if !defined[i] {
            values[i] = values[src[i]];
        }
    }
}

/// Drift from a wavefunction via its Madelung pair.
pub fn nelson_drift_from_psi(psi: &WaveFunction, nu: f64) -> Result<DriftField> {
    nelson_drift(&madelung_decompose(psi, DEFAULT_DENSITY_FLOOR)?, psi.mass, nu)
}

/// Supplies the drift during a Nelson run.
pub trait DriftSource {
    /// Drift at the start of the current step.
    fn current(&self) -> &DriftField;
    /// Moves the source forward by one walker step.
    fn advance(&mut self) -> Result<()>;
}

/// A drift that never changes.
#[derive(Debug, Clone)]
pub struct FrozenDrift(pub DriftField);

impl DriftSource for FrozenDrift {
    fn current(&self) -> &DriftField {
        &self.0
    }
    fn advance(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Drift recomputed from a wavefunction evolved alongside the walkers.
#[derive(Debug, Clone)]
pub struct CoEvolvedDrift {
    pub psi: WaveFunction,
    propagator: Propagator,
    substeps: usize,
    nu: f64,
    field: DriftField,
}

impl CoEvolvedDrift {
    /// `dt` must equal the walker step.
    pub fn new(psi: WaveFunction, potential: &[f64], dt: f64, nu: f64) -> Result<Self> {
        Self::with_substeps(psi, potential, dt, 1, nu)
    }

    /// Propagates the wavefunction in `substeps` solver steps per walker step.
    pub fn with_substeps(psi: WaveFunction, potential: &[f64], dt: f64, substeps: usize, nu: f64) -> Result<Self> {
        if substeps == 0 {
            return Err(invalid("substeps", "must be at least 1"));
        }
        let propagator = Propagator::new(&psi, potential, dt / substeps as f64)?;
        let field = nelson_drift_from_psi(&psi, nu)?;
        Ok(Self {
            psi,
            propagator,
            substeps,
            nu,
            field,
        })
    }

    pub fn solver_report(&self) -> super::wave::SolverReport {
        self.propagator.report()
    }
}

impl DriftSource for CoEvolvedDrift {
    fn current(&self) -> &DriftField {
        &self.field
    }
    fn advance(&mut self) -> Result<()> {
        for _ in 0..self.substeps {
            self.propagator.step(&mut self.psi)?;
        }
        self.field = nelson_drift_from_psi(&self.psi, self.nu)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelsonEnsemble {
    pub walkers: Vec<f64>,
    pub nu: f64,
    pub time: f64,
    /// Reflections off the ends of the drift grid so far.
    pub reflections: u64,
}

impl NelsonEnsemble {
    pub fn new(walkers: Vec<f64>, nu: f64) -> Self {
        Self {
            walkers,
            nu,
            time: 0.0,
            reflections: 0,
        }
    }

    /// Walkers drawn from `|ψ|²` by inverting the node-cell CDF.
    pub fn sample(psi: &WaveFunction, count: usize, nu: f64, seed: u64) -> Self {
        use rand::Rng as _;
        let h = psi.spacing();
        let rho = psi.density();
        let mut cdf = Vec::with_capacity(rho.len());
        let mut acc = 0.0;
        for r in &rho {
            acc += r * h;
            cdf.push(acc);
        }
        let total = acc;
        let mut g = rng::stream(seed, 0, "nelson-initial");
        let walkers = (0..count)
            .map(|_| {
                let u: f64 = g.random::<f64>() * total;
                let i = cdf.partition_point(|c| *c < u).min(rho.len() - 1);
                let below = if i == 0 { 0.0 } else { cdf[i - 1] };
                let frac = if rho[i] > 0.0 { (u - below) / (rho[i] * h) } else { 0.5 };
                psi.x(i) + (frac - 0.5) * h
            })
            .collect();
        let mut e = Self::new(walkers, nu);
        e.time = psi.time;
        e
    }
}

/// Euler–Maruyama `dx = b(x, t) dt + √(2ν) dW` for every walker.
///
/// Walkers leaving the span of the drift grid are reflected back and counted.
/// One random stream per `seed`, walkers visited in order.
pub fn nelson_evolve<S: DriftSource + ?Sized>(
    ensemble: &NelsonEnsemble,
    source: &mut S,
    dt: f64,
    steps: u64,
    seed: u64,
) -> Result<NelsonEnsemble> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", "must be positive and finite"));
    }
    if !(ensemble.nu >= 0.0) {
        return Err(invalid("nu", "must be non-negative"));
    }
    let mut out = ensemble.clone();
    let kick = (2.0 * ensemble.nu * dt).sqrt();
    let mut g = rng::stream(seed, 0, "nelson");
    for step in 0..steps {
        let field = source.current();
        let lo = field.grid.lower[0];
        let hi = lo + (field.b.len() - 1) as f64 * field.grid.spacing[0];
        for x in out.walkers.iter_mut() {
            let z: f64 = if kick > 0.0 { StandardNormal.sample(&mut g) } else { 0.0 };
            let mut y = *x + field.at(*x) * dt + kick * z;
            if !y.is_finite() {
                return Err(Error::NumericAbort {
                    step: step + 1,
                    energy: f64::NAN,
                });
            }
            // fold back into [lo, hi]; repeated for very large kicks
            let mut guard = 0;
            while (y < lo || y > hi) && guard < 64 {
                y = if y < lo { 2.0 * lo - y } else { 2.0 * hi - y };
                out.reflections += 1;
                guard += 1;
            }
            if guard == 64 {
                return Err(Error::Domain(format!("walker at {y} cannot be folded into the grid")));
            }
            *x = y;
        }
        out.time += dt;
        source.advance()?;
    }
    Ok(out)
}
