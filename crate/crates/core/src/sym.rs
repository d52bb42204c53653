//! Packed storage for real symmetric matrices and the small dense kernels the
//! force and rotation code need.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Real symmetric `n × n` matrix stored as its upper triangle, row-major.
///
/// Only `n(n+1)/2` entries exist, so `m[(i, j)] == m[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; packed_len(n)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Builds from a row-major dense buffer, reading the upper triangle only.
    pub fn from_dense_upper(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n, "dense buffer must be n*n");
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, dense[i * n + j]);
            }
        }
        m
    }

    /// Builds from a dense buffer, symmetrizing as `(A + Aᵀ)/2`.
    pub fn from_dense_symmetrized(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n, "dense buffer must be n*n");
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, 0.5 * (dense[i * n + j] + dense[j * n + i]));
            }
        }
        m
    }

    pub fn from_packed(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == packed_len(n)).then_some(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.n);
        i * (2 * self.n - i + 1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.data[k] = value;
    }

    /// True when the packed index `k` addresses a diagonal entry.
    pub fn diagonal_flags(n: usize) -> Vec<bool> {
        let mut flags = Vec::with_capacity(packed_len(n));
        for i in 0..n {
            for j in i..n {
                flags.push(i == j);
            }
        }
        flags
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(A²) = Σ_i A_ii² + 2 Σ_{i<j} A_ij²`.
    pub fn trace_of_square(&self) -> f64 {
        let mut acc = 0.0;
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let x = self.data[k];
                acc += if i == j { x * x } else { 2.0 * x * x };
                k += 1;
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = self.get(i, j);
                out[i * n + j] = x;
                out[j * n + i] = x;
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }

    pub fn add_identity(&mut self, shift: f64) {
        for i in 0..self.n {
            let k = self.index(i, i);
            self.data[k] += shift;
        }
    }
}

/// `out = a · b` for row-major `n × n` buffers.
pub(crate) fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// `O · A · Oᵀ` for dense orthogonal `o` (row-major) and symmetric `a`.
pub fn conjugate(a: &SymMatrix, o: &[f64]) -> SymMatrix {
    let n = a.dim();
    assert_eq!(o.len(), n * n);
    let dense = a.to_dense();
    let mut tmp = vec![0.0; n * n];
    matmul_into(o, &dense, &mut tmp, n);
    let mut ot = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            ot[j * n + i] = o[i * n + j];
        }
    }
    let mut out = vec![0.0; n * n];
    matmul_into(&tmp, &ot, &mut out, n);
    SymMatrix::from_dense_symmetrized(n, &out)
}
