use nalgebra::linalg::Schur;
use nalgebra::DMatrix;

use super::Matrix;
use crate::error::{Error, Result};

/// Matrices with more than this many entries use power iteration when nonnegative.
pub const DENSE_EIGEN_LIMIT: usize = 1_000_000;

/// Iteration cap for the power-iteration path.
pub const DEFAULT_POWER_ITERATIONS: usize = 10_000;

/// An eigenvalue as `(re, im)`.
pub type Eigenvalue = (f64, f64);

fn to_nalgebra(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// All eigenvalues of a square matrix from a real Schur decomposition.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Eigenvalue>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("eigenvalues of {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::InvalidModel("non-finite entries in eigenvalue input".into()));
    }
    let n = a.rows();
    if n == 1 {
        return Ok(vec![(a[(0, 0)], 0.0)]);
    }
    let max_iter = 200 * n.max(10);
    let schur = Schur::try_new(to_nalgebra(a), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::NoConvergence { what: "Schur decomposition".into(), iterations: max_iter })?;
    Ok(schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect())
}

/// Moduli of all eigenvalues.
pub fn eigenvalue_moduli(a: &Matrix) -> Result<Vec<f64>> {
    Ok(eigenvalues(a)?.into_iter().map(|(re, im)| re.hypot(im)).collect())
}

/// Spectral radius of a square matrix.
///
/// Uses a dense eigenvalue computation up to [`DENSE_EIGEN_LIMIT`] entries; beyond
/// that, nonnegative inputs go through shifted power iteration.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("spectral radius of {}x{}", a.rows(), a.cols())));
    }
    if a.rows() * a.rows() > DENSE_EIGEN_LIMIT && a.is_nonnegative() {
        return power_spectral_radius(a, DEFAULT_POWER_ITERATIONS);
    }
    Ok(eigenvalue_moduli(a)?.into_iter().fold(0.0, f64::max))
}

/// Perron root of a nonnegative matrix by power iteration on `A + I`.
///
/// The shift makes the Perron eigenvalue strictly dominant even for reducible or
/// periodic inputs. The estimate is the 1-norm growth of a nonnegative iterate;
/// it is accepted once it changes by less than 1e-14 (relative) for 5 steps.
pub fn power_spectral_radius(a: &Matrix, max_iter: usize) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("power iteration needs a square matrix".into()));
    }
    if !a.is_nonnegative() {
        return Err(Error::InvalidModel("power iteration needs a nonnegative matrix".into()));
    }
    let n = a.rows();
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut stable = 0;
    for _ in 0..max_iter {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = x[i] + a.row(i).iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
        }
        let growth: f64 = y.iter().sum();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / growth;
        }
        if (growth - prev).abs() <= 1e-14 * growth {
            stable += 1;
            if stable >= 5 {
                return Ok((growth - 1.0).max(0.0));
            }
        } else {
            stable = 0;
        }
        prev = growth;
    }
    Err(Error::NoConvergence { what: "power iteration".into(), iterations: max_iter })
}
