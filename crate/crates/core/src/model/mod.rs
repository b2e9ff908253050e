//! The matrix polynomial `A(z) = A_{-1} + A_0 z + ... + A_{d-1} z^d` of an
//! M/G/1-type chain, with evaluation at a matrix argument, residuals, drift and
//! structural validation.

mod format;

pub use format::{read_matrix, read_model, write_matrix, write_model, MODEL_MAGIC};

use crate::error::{Error, Result};
use crate::numkernel::{Lu, Matrix};

/// Tolerance on row sums used to classify `sum_i A_i` as stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Coefficients `[A_{-1}, A_0, ..., A_{d-1}]` of an M/G/1-type chain.
///
/// Construction only checks shapes; nonnegativity and row sums are reported by
/// [`MatrixPolynomial::validate`] and enforced by [`MatrixPolynomial::new_validated`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    m: usize,
    coeffs: Vec<Matrix>,
}

/// Stationary vector of `A = sum_i A_i` and the resulting drift.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub alpha: Vec<f64>,
    pub a_vec: Vec<f64>,
    pub mu: f64,
    pub recurrent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSumClass {
    Stochastic,
    Substochastic,
    Superstochastic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeEntry {
    /// Jump index `i` of the offending block `A_i` (so `-1` is the first block).
    pub jump: isize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Result of [`MatrixPolynomial::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub negative_entries: Vec<NegativeEntry>,
    pub non_finite: bool,
    /// Row sums of `sum_i A_i`.
    pub row_sums: Vec<f64>,
    /// `max_j |rowsum_j - 1|`.
    pub max_row_sum_deviation: f64,
    pub class: RowSumClass,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.negative_entries.is_empty() && !self.non_finite && self.class != RowSumClass::Superstochastic
    }

    pub fn is_stochastic(&self) -> bool {
        self.is_valid() && self.class == RowSumClass::Stochastic
    }

    pub fn describe(&self) -> String {
        if let Some(e) = self.negative_entries.first() {
            return format!(
                "{} negative entries, first A_{}[{},{}] = {:e}",
                self.negative_entries.len(),
                e.jump,
                e.row,
                e.col,
                e.value
            );
        }
        if self.non_finite {
            return "non-finite entries".into();
        }
        match self.class {
            RowSumClass::Superstochastic => {
                format!("row sums exceed 1 by up to {:e}", self.row_sums.iter().fold(0.0f64, |m, s| m.max(s - 1.0)))
            }
            RowSumClass::Stochastic => "stochastic".into(),
            RowSumClass::Substochastic => "substochastic".into(),
        }
    }
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<Matrix>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| Error::InvalidModel("at least A_{-1} is required".into()))?;
        let m = first.rows();
        for (i, c) in coeffs.iter().enumerate() {
            if c.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!(
                    "A_{} is {}x{}, expected {m}x{m}",
                    i as isize - 1,
                    c.rows(),
                    c.cols()
                )));
            }
        }
        Ok(MatrixPolynomial { m, coeffs })
    }

    /// Like [`MatrixPolynomial::new`] but rejects models failing validation.
    pub fn new_validated(coeffs: Vec<Matrix>) -> Result<Self> {
        let p = MatrixPolynomial::new(coeffs)?;
        let report = p.validate();
        if !report.is_valid() {
            return Err(Error::InvalidModel(report.describe()));
        }
        Ok(p)
    }

    /// Scalar (`m = 1`) model from `[a_{-1}, a_0, ...]`.
    pub fn scalar(coeffs: &[f64]) -> Result<Self> {
        MatrixPolynomial::new(coeffs.iter().map(|&c| Matrix::scalar(c)).collect())
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    /// Degree `d` of `A(z)`; there are `d + 1` coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// `A_i` for `i >= -1`; zero beyond the degree.
    pub fn coeff(&self, jump: isize) -> Option<&Matrix> {
        if jump < -1 {
            return None;
        }
        self.coeffs.get((jump + 1) as usize)
    }

    /// `sum_i A_i`.
    pub fn sum(&self) -> Matrix {
        let mut s = Matrix::zeros(self.m, self.m);
        for c in &self.coeffs {
            s += c;
        }
        s
    }

    /// Horner evaluation of `sum_{i=0}^{d} A_{i-1} X^i`.
    pub fn eval(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != (self.m, self.m) {
            return Err(Error::DimensionMismatch(format!(
                "argument is {}x{}, model block size is {}",
                x.rows(),
                x.cols(),
                self.m
            )));
        }
        Ok(horner(&self.coeffs, x))
    }

    /// `(1/m) ||X - A(X)||_inf`.
    pub fn residual(&self, x: &Matrix) -> Result<f64> {
        let ax = self.eval(x)?;
        Ok((x - &ax).inf_norm() / self.m as f64)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut negative_entries = Vec::new();
        let mut non_finite = false;
        for (k, c) in self.coeffs.iter().enumerate() {
            for i in 0..self.m {
                for j in 0..self.m {
                    let v = c[(i, j)];
                    if !v.is_finite() {
                        non_finite = true;
                    } else if v < 0.0 {
                        negative_entries.push(NegativeEntry { jump: k as isize - 1, row: i, col: j, value: v });
                    }
                }
            }
        }
        let row_sums = self.sum().row_sums();
        let max_row_sum_deviation = row_sums.iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs()));
        let class = if row_sums.iter().any(|s| *s > 1.0 + STOCHASTIC_TOL) {
            RowSumClass::Superstochastic
        } else if max_row_sum_deviation <= STOCHASTIC_TOL {
            RowSumClass::Stochastic
        } else {
            RowSumClass::Substochastic
        };
        ValidationReport { negative_entries, non_finite, row_sums, max_row_sum_deviation, class }
    }

    /// Stationary vector of `A = sum A_i` and `mu = alpha^T sum_i i A_i 1`.
    pub fn drift(&self) -> Result<ModelSummary> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::InvalidModel(report.describe()));
        }
        if report.class != RowSumClass::Stochastic {
            return Err(Error::NotStochastic(report.max_row_sum_deviation));
        }
        let m = self.m;
        // (A^T - I) alpha = 0 with the last equation replaced by sum(alpha) = 1
        let a = self.sum();
        let mut sys = Matrix::from_fn(m, m, |i, j| a[(j, i)] - if i == j { 1.0 } else { 0.0 });
        for j in 0..m {
            sys[(m - 1, j)] = 1.0;
        }
        let mut rhs = Matrix::zeros(m, 1);
        rhs[(m - 1, 0)] = 1.0;
        let alpha = Lu::new(&sys)
            .map_err(|e| Error::InvalidModel(format!("stationary vector is not unique ({e})")))?
            .solve(&rhs)?
            .as_slice()
            .to_vec();
        let mut a_vec = vec![0.0; m];
        for (k, c) in self.coeffs.iter().enumerate() {
            let jump = k as f64 - 1.0;
            for (i, s) in c.row_sums().into_iter().enumerate() {
                a_vec[i] += jump * s;
            }
        }
        let mu: f64 = alpha.iter().zip(&a_vec).map(|(x, y)| x * y).sum();
        Ok(ModelSummary { alpha, a_vec, mu, recurrent: mu <= 0.0 })
    }
}

/// Horner evaluation of `sum_i coeffs[i] X^i`, using `coeffs.len() - 1` products.
pub fn horner(coeffs: &[Matrix], x: &Matrix) -> Matrix {
    let (last, rest) = coeffs.split_last().expect("horner needs at least one coefficient");
    let mut acc = last.clone();
    let mut tmp = Matrix::zeros(acc.rows(), x.cols());
    for c in rest.iter().rev() {
        acc.mul_into(x, &mut tmp);
        tmp += c;
        std::mem::swap(&mut acc, &mut tmp);
    }
    acc
}
