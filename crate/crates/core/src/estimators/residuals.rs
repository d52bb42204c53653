use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::grid::FieldEstimate;
use crate::error::{invalid, Error, Result};

/// Discrete residual of `∂_t ρ + ∇·(ρ v) = 0`, integrated as `Σ |r| ΔV`.
///
/// With two snapshots the residual is centred between them, using the mean
/// density in the flux; with three, at the middle snapshot with a central time
/// difference. `v_field` must hold the velocity at that centre time.
/// Only interior nodes whose velocity and neighbours' velocities are defined
/// contribute.
pub fn continuity_residual(rho_series: &[FieldEstimate], v_field: &FieldEstimate, dt_between: f64) -> Result<f64> {
    if !(dt_between > 0.0) {
        return Err(invalid("dt_between", "must be positive"));
    }
    let (drho, rho_mid): (Vec<f64>, Vec<f64>) = match rho_series {
        [a, b] => {
            a.grid.check_same(&b.grid)?;
            (
                a.rho.iter().zip(&b.rho).map(|(x, y)| (y - x) / dt_between).collect(),
                a.rho.iter().zip(&b.rho).map(|(x, y)| 0.5 * (x + y)).collect(),
            )
        }
        [a, b, c] => {
            a.grid.check_same(&b.grid)?;
            b.grid.check_same(&c.grid)?;
            (
                a.rho
                    .iter()
                    .zip(&c.rho)
                    .map(|(x, y)| (y - x) / (2.0 * dt_between))
                    .collect(),
                b.rho.clone(),
            )
        }
        _ => {
            return Err(Error::InsufficientData(
                "continuity residual needs two or three density snapshots".into(),
            ))
        }
    };
    let grid = &rho_series[0].grid;
    grid.check_same(&v_field.grid)?;
    let v = v_field
        .v
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("velocity field missing".into()))?;
    let d = grid.dim();

    let mut total = 0.0;
    for idx in 0..grid.len() {
        if !v_field.mask[idx] {
            continue;
        }
        let mut div = 0.0;
        let mut ok = true;
        for a in 0..d {
            match grid.neighbours(idx, a) {
                Some((lo, hi)) if v_field.mask[lo] && v_field.mask[hi] => {
                    let flux_hi = rho_mid[hi] * v[hi * d + a];
                    let flux_lo = rho_mid[lo] * v[lo * d + a];
                    div += (flux_hi - flux_lo) / (2.0 * grid.spacing[a]);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            total += (drho[idx] + div).abs();
        }
    }
    Ok(total * grid.cell_volume())
}

/// Size of the antisymmetric part of the discrete Jacobian of `v`, relative to
/// the Jacobian itself: `max ‖(J − Jᵀ)/2‖_F / max ‖J‖_F` over interior nodes
/// whose neighbours carry a velocity. Zero for `d = 1`.
pub fn irrotationality_residual(v_field: &FieldEstimate) -> f64 {
    let grid = &v_field.grid;
    let d = grid.dim();
    let Some(v) = v_field.v.as_ref() else {
        return 0.0;
    };
    if d < 2 {
        return 0.0;
    }
    let mut max_anti = 0.0_f64;
    let mut max_jac = 0.0_f64;
    let mut jac = vec![0.0; d * d];
    'nodes: for idx in 0..grid.len() {
        if !v_field.mask[idx] {
            continue;
        }
        for b in 0..d {
            let Some((lo, hi)) = grid.neighbours(idx, b) else {
                continue 'nodes;
            };
            if !(v_field.mask[lo] && v_field.mask[hi]) {
                continue 'nodes;
            }
            for a in 0..d {
                jac[a * d + b] = (v[hi * d + a] - v[lo * d + a]) / (2.0 * grid.spacing[b]);
            }
        }
        let mut anti = 0.0;
        let mut full = 0.0;
        for a in 0..d {
            for b in 0..d {
                let s = 0.5 * (jac[a * d + b] - jac[b * d + a]);
                anti += s * s;
                full += jac[a * d + b] * jac[a * d + b];
            }
        }
        max_anti = max_anti.max(anti.sqrt());
        max_jac = max_jac.max(full.sqrt());
    }
    if max_jac > 0.0 {
        max_anti / max_jac
    } else {
        0.0
    }
}
