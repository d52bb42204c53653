use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::wave::{Boundary, WaveFunction};
use crate::error::{Error, Result};
use crate::estimators::Grid;

/// Cells below this fraction of the peak density are masked by default.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-10;

/// `(ρ, S)` with `ψ = √ρ e^{iS/ħ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadelungPair {
    pub grid: Grid,
    pub rho: Vec<f64>,
    /// Phase potential in units of action; zero on masked cells.
    pub s: Vec<f64>,
    pub mask: Vec<bool>,
    pub hbar: f64,
    pub boundary: Boundary,
}

fn wrap_pi(a: f64) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    a - two_pi * ((a + core::f64::consts::PI) / two_pi).floor()
}

/// `ρ = |ψ|²` and `S = ħ arg ψ`, unwrapped outward from the densest cell.
///
/// Cells with `ρ < floor · max ρ` are masked and break the unwrapping; each
/// unmasked run starts on the branch nearest the last phase on the side of
/// the peak.
pub fn madelung_decompose(psi: &WaveFunction, floor: f64) -> Result<MadelungPair> {
    let rho = psi.density();
    let n = rho.len();
    let (peak, max_rho) = rho.iter().enumerate().fold(
        (0, 0.0_f64),
        |(bi, bm), (i, r)| if *r > bm { (i, *r) } else { (bi, bm) },
    );
    if !(max_rho > 0.0) {
        return Err(Error::Domain("wavefunction vanishes everywhere".into()));
    }
    let mask: Vec<bool> = rho.iter().map(|r| *r >= floor * max_rho).collect();
    let arg: Vec<f64> = psi.psi.iter().map(|z| z.arg()).collect();
    let mut phase = vec![0.0; n];
    phase[peak] = arg[peak];

    let mut sweep = |range: &mut dyn Iterator<Item = usize>, step_back: isize| {
        let mut last = phase[peak];
        let mut prev_unmasked = true;
        for i in range {
            if !mask[i] {
                prev_unmasked = false;
                continue;
            }
            let reference = if prev_unmasked {
                phase[(i as isize + step_back) as usize]
            } else {
                last
            };
            phase[i] = reference + wrap_pi(arg[i] - reference);
            last = phase[i];
            prev_unmasked = true;
        }
    };
    sweep(&mut (peak + 1..n), -1);
    sweep(&mut (0..peak).rev(), 1);

    let s = phase
        .iter()
        .zip(&mask)
        .map(|(p, m)| if *m { psi.hbar * p } else { 0.0 })
        .collect();
    Ok(MadelungPair {
        grid: psi.grid.clone(),
        rho,
        s,
        mask,
        hbar: psi.hbar,
        boundary: psi.boundary,
    })
}

/// `ψ = √ρ e^{iS/ħ}`, normalized.
pub fn build_wavefunction(m: &MadelungPair, mass: f64) -> Result<WaveFunction> {
    if m.rho.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain("density must be non-negative".into()));
    }
    if m.s.len() != m.rho.len() {
        return Err(Error::Shape("rho and S lengths differ".into()));
    }
    let psi = m
        .rho
        .iter()
        .zip(&m.s)
        .map(|(r, s)| Complex64::from_polar(r.sqrt(), s / m.hbar))
        .collect();
    WaveFunction::new(m.grid.clone(), psi, m.hbar, mass, m.boundary)
}
