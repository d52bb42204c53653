use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub fn transpose(o: &[f64], n: usize) -> Vec<f64> {
    let mut t = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = o[i * n + j];
        }
    }
    t
}

/// Rejects anything that is not a proper rotation to within `tol`.
pub fn check_rotation(o: &[f64], n: usize, tol: f64) -> Result<()> {
    if o.len() != n * n {
        return Err(Error::Shape(format!("rotation must be {0}x{0}", n)));
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| o[k * n + i] * o[k * n + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    if worst >= tol {
        return Err(Error::Domain(format!(
            "matrix is not orthogonal (max |OᵀO − I| = {worst:e})"
        )));
    }
    let det = DMatrix::from_row_slice(n, n, o).determinant();
    if det <= 0.0 {
        return Err(Error::Domain(format!("rotation has determinant {det}")));
    }
    Ok(())
}

/// Haar-distributed element of SO(N): QR of a Gaussian matrix with the
/// diagonal of R made positive, then one column flipped if det = −1.
pub fn haar_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    let mut out = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = q[(i, j)];
        }
    }
    out
}
