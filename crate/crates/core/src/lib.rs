#![no_std]
// `num_traits::Float` supplies the f64 math methods in pure no_std builds; when
// std is anywhere in the build graph its inherent methods win and the import
// goes unused.
#![allow(unused_imports)]
// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
//! Numerical core for a thermal matrix model whose eigenvalues are read as
//! particle positions: the matrix beables and their forces, energy-conserving
//! and Langevin integrators, estimators for the stochastic statistics of the
//! eigenvalue motion, and an independent single-particle quantum reference.
//!
//! The crate is `no_std` with `alloc`; file formats, the CLI and parallel
//! ensembles live in the companion `nlhv` crate.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod matrix;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod sym;

pub use error::{Error, Result};
