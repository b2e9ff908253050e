//! Dense real-matrix primitives: products, pivoted LU solves, norms, Kronecker
//! products and spectral radii.
//!
//! Everything is 64-bit floating point; the unit roundoff used by the stopping
//! rules is [`UNIT_ROUNDOFF`].

mod eigen;
mod lu;
mod matrix;

pub use eigen::{
    eigenvalue_moduli, eigenvalues, power_spectral_radius, spectral_radius, Eigenvalue, DEFAULT_POWER_ITERATIONS,
    DENSE_EIGEN_LIMIT,
};
pub use lu::{solve_linear, Lu, DEFAULT_PIVOT_THRESHOLD};
pub use matrix::{Matrix, DEFAULT_KRON_CAP};

/// Unit roundoff of IEEE binary64, `2^-53`.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Maximum absolute row sum, as a free function.
pub fn inf_norm(a: &Matrix) -> f64 {
    a.inf_norm()
}

/// Kronecker product with the default size cap.
pub fn kron(a: &Matrix, b: &Matrix) -> crate::Result<Matrix> {
    a.kron(b)
}
