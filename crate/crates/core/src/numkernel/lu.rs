use super::Matrix;
use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as exact zeros.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 1e-300;

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    // L (unit lower, below the diagonal) and U packed together, row-major.
    factors: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        Lu::with_threshold(a, DEFAULT_PIVOT_THRESHOLD)
    }

    pub fn with_threshold(a: &Matrix, threshold: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!("LU of a non-square {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut f = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, f[i * n + k].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > threshold) {
                return Err(Error::Singular { column: k, pivot: pmax });
            }
            if p != k {
                for j in 0..n {
                    f.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = f[k * n + k];
            for i in k + 1..n {
                let l = f[i * n + k] / pivot;
                f[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        f[i * n + j] -= l * f[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, factors: f, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, system has {}", b.rows(), n)));
        }
        let k = b.cols();
        let mut x = Matrix::zeros(n, k);
        {
            let xs = x.as_mut_slice();
            for (i, &p) in self.perm.iter().enumerate() {
                xs[i * k..(i + 1) * k].copy_from_slice(b.row(p));
            }
            let f = &self.factors;
            // forward substitution with unit L
            for i in 1..n {
                for j in 0..i {
                    let l = f[i * n + j];
                    if l != 0.0 {
                        let (head, tail) = xs.split_at_mut(i * k);
                        let src = &head[j * k..(j + 1) * k];
                        for (t, &s) in tail[..k].iter_mut().zip(src) {
                            *t -= l * s;
                        }
                    }
                }
            }
            // back substitution with U
            for i in (0..n).rev() {
                for j in i + 1..n {
                    let u = f[i * n + j];
                    if u != 0.0 {
                        let (head, tail) = xs.split_at_mut(j * k);
                        let dst = &mut head[i * k..(i + 1) * k];
                        for (d, &s) in dst.iter_mut().zip(&tail[..k]) {
                            *d -= u * s;
                        }
                    }
                }
                let d = f[i * n + i];
                for v in &mut xs[i * k..(i + 1) * k] {
                    *v /= d;
                }
            }
        }
        Ok(x)
    }

    /// Solves `X A = B`, i.e. `A^T X^T = B^T`.
    pub fn solve_transposed_system(a: &Matrix, b: &Matrix) -> Result<Matrix> {
        let lu = Lu::new(&a.transpose())?;
        Ok(lu.solve(&b.transpose())?.transpose())
    }
}

/// Solves `A X = B` with a pivoted LU factorization.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Lu::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let b = Matrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 2.5);
        assert_eq!(solve_linear(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((x[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_system() {
        let a = Matrix::diag(&[2.0, 4.0]);
        let b = Matrix::from_rows(&[vec![2.0], vec![8.0]]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn needs_pivoting() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0], vec![7.0]]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[7.0, 5.0]);
    }

    #[test]
    fn singular_and_mismatch_errors() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve_linear(&a, &Matrix::identity(2)), Err(Error::Singular { .. })));
        assert!(matches!(solve_linear(&Matrix::identity(2), &Matrix::identity(3)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(
            Lu::with_threshold(&Matrix::diag(&[1.0, 1e-8]), 1e-6),
            Err(Error::Singular { column: 1, .. })
        ));
    }

    #[test]
    fn transposed_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let x = Lu::solve_transposed_system(&a, &b).unwrap();
        let back = &x * &a;
        assert!(back.max_abs_diff(&b) < 1e-15);
    }
}
