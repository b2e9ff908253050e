//! Fixed-point iterations for the minimal nonnegative solution `G` of the
//! M/G/1-type matrix equation `X = A_{-1} + A_0 X + A_1 X^2 + ... + A_{d-1} X^d`.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: dense matrices, LU, norms, spectral radius, Kronecker products.
//! - [`model`]: the matrix polynomial `A(z)`, its drift, residuals, and the `MG1v1`
//!   text format.
//! - [`embedding`]: ways of spreading the coefficients of `A(z)` over a
//!   degree-`q+1` equation; each one defines a member of the iteration family.
//! - [`solver`]: the classical natural/traditional/U-based iterations and the
//!   outer/inner scheme for a general embedding.
//! - [`analysis`]: splitting matrices, asymptotic rates and root diagnostics.
//! - [`generators`]: the circulant benchmark family and the PH/PH/1 queue.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod embedding;
mod error;
pub mod generators;
pub mod kv;
pub mod model;
pub mod numkernel;
pub mod solver;

pub use error::{Error, Result};
pub use numkernel::Matrix;
