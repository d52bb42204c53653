//! Simultaneous diagonalization of several real symmetric matrices by Jacobi
//! sweeps of Givens rotations.
//!
//! For a pivot `(p, q)` the angle maximizing the diagonal mass of all matrices
//! at once comes from the principal eigenvector of `G = Σ_a h_a h_aᵀ` with
//! `h_a = (A_pp − A_qq, 2 A_pq)`; `(cos 2θ, sin 2θ)` is that eigenvector.

use alloc::vec::Vec;
use core::cmp::Ordering;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{MatrixConfiguration, ParticleFrame};
use crate::sym::matmul_into;

/// Rotations smaller than this are skipped.
const MIN_SINE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDiagonalization {
    pub frame: ParticleFrame,
    /// False when `max_sweeps` ran out before rotations stopped and the
    /// residual was still above `tol`.
    pub converged: bool,
    pub sweeps: usize,
}

pub fn joint_diagonalize(config: &MatrixConfiguration, max_sweeps: usize, tol: f64) -> JointDiagonalization {
    joint_diagonalize_from(config, None, max_sweeps, tol)
}

/// Same as [`joint_diagonalize`], seeded with a starting rotation (for
/// example the previous frame of a trajectory).
pub fn joint_diagonalize_from(
    config: &MatrixConfiguration,
    start: Option<&[f64]>,
    max_sweeps: usize,
    tol: f64,
) -> JointDiagonalization {
    let n = config.n();

    let mut o = match start {
        Some(s) if s.len() == n * n => s.to_vec(),
        _ => identity(n),
    };
    let mut mats: Vec<Vec<f64>> = config.x.iter().map(|x| x.to_dense()).collect();
    if start.is_some() {
        let ot = super::transpose(&o, n);
        let mut tmp = alloc::vec![0.0; n * n];
        for m in &mut mats {
            matmul_into(&o, m, &mut tmp, n);
            matmul_into(&tmp, &ot, m, n);
        }
    }

    let mut sweeps = 0;
    let mut residual = off_norm(&mats, n);
    let mut stalled = n < 2 || residual <= tol;
    while !stalled && sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
                for m in &mats {
                    let h0 = m[p * n + p] - m[q * n + q];
                    let h1 = m[p * n + q] + m[q * n + p];
                    g11 += h0 * h0;
                    g12 += h0 * h1;
                    g22 += h1 * h1;
                }
                let phi = 0.5 * (2.0 * g12).atan2(g11 - g22);
                let (x, y) = (phi.cos(), phi.sin());
                let c = (0.5 * (1.0 + x)).sqrt();
                let s = y / (2.0 * c);
                if s.abs() <= MIN_SINE {
                    continue;
                }
                rotated = true;
                for m in &mut mats {
                    rotate(m, n, p, q, c, s);
                }
                rotate_rows(&mut o, n, p, q, c, s);
            }
        }
        residual = off_norm(&mats, n);
        stalled = !rotated || residual <= tol;
    }
    let converged = stalled;

    let mut order: Vec<usize> = (0..n).collect();
    let point = |i: usize| -> Vec<f64> { mats.iter().map(|m| m[i * n + i]).collect() };
    let points: Vec<Vec<f64>> = (0..n).map(point).collect();
    order.sort_by(|&i, &j| lex_cmp(&points[i], &points[j]));

    let mut frame = Vec::with_capacity(n * n);
    for &i in &order {
        frame.extend_from_slice(&o[i * n..(i + 1) * n]);
    }
    if permutation_is_odd(&order) {
        // flipping one row keeps D unchanged and restores det = +1
        frame[..n].iter_mut().for_each(|x| *x = -*x);
    }
    let positions = order.iter().map(|&i| points[i].clone()).collect();

    JointDiagonalization {
        frame: ParticleFrame {
            positions,
            residual,
            frame,
        },
        converged,
        sweeps,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut o = alloc::vec![0.0; n * n];
    for i in 0..n {
        o[i * n + i] = 1.0;
    }
    o
}

/// Lexicographic order on points, the order used for particle positions.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn permutation_is_odd(perm: &[usize]) -> bool {
    let mut seen = alloc::vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = perm[k];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

fn off_norm(mats: &[Vec<f64>], n: usize) -> f64 {
    let mut acc = 0.0;
    for m in mats {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += m[i * n + j] * m[i * n + j];
                }
            }
        }
    }
    acc.sqrt()
}

/// `A ← R A Rᵀ` with `R` the Givens rotation acting on rows/columns `p, q`.
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    rotate_rows(m, n, p, q, c, s);
    for k in 0..n {
        let a = m[k * n + p];
        let b = m[k * n + q];
        m[k * n + p] = c * a + s * b;
        m[k * n + q] = -s * a + c * b;
    }
}

fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let a = m[p * n + k];
        let b = m[q * n + k];
        m[p * n + k] = c * a + s * b;
        m[q * n + k] = -s * a + c * b;
    }
}
