//! Rate and conditioning diagnostics at a computed solution `G`.
//!
//! With `A_i^* = sum_{j>=i} A_j G^{j-i}` and `H = I - sum_i A_i^*`, every embedding
//! induces a regular splitting `H = M - N`; the asymptotic error reduction of its
//! iteration is `rho(M^{-1} N)`. The Kronecker form `W = (I - Q(G,G))^{-1} P(G)`
//! gives the same rate from the linearized error recurrence.

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::model::MatrixPolynomial;
use crate::numkernel::{eigenvalues, spectral_radius, Lu, Matrix};

/// Largest block companion matrix handed to the dense eigensolver.
pub const COMPANION_LIMIT: usize = 2000;

/// Largest block size for the Kronecker-form rate.
pub const KRON_BLOCK_LIMIT: usize = 30;

/// Roots with `|z| <= 1 + ROOT_FILTER` are treated as lying on or inside the unit circle.
pub const ROOT_FILTER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StarMatrices {
    /// `[A_0^*, ..., A_{d-1}^*]`.
    pub astar: Vec<Matrix>,
    pub v: Matrix,
    pub h: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub f: Matrix,
    pub m: Matrix,
    pub n: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateIdentity {
    pub rho_minv_n: f64,
    pub rho_hinv_n: f64,
    /// `|rho(M^{-1}N) - rho(H^{-1}N) / (1 + rho(H^{-1}N))|`.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimates {
    pub astar: Vec<Matrix>,
    pub v: Matrix,
    pub h: Matrix,
    pub f: Matrix,
    pub m: Matrix,
    pub n: Matrix,
    pub rho_minv_n: f64,
    pub rho_hinv_n: f64,
    /// `[B_0^*, ..., B_q^*]`.
    pub bstar: Vec<Matrix>,
    pub xi: Result<f64>,
    pub xi_q: Result<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KronRate {
    pub q_gg: Matrix,
    pub p_g: Matrix,
    pub w: Matrix,
    pub rho_w: f64,
}

fn check_g(m: usize, g: &Matrix) -> Result<()> {
    if g.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!("G is {}x{}, expected {m}x{m}", g.rows(), g.cols())));
    }
    Ok(())
}

/// `A_i^*` by the backward recurrence `A_i^* = A_i + A_{i+1}^* G`, then `V` and `H`.
pub fn compute_star_matrices(p: &MatrixPolynomial, g: &Matrix) -> Result<StarMatrices> {
    let m = p.block_size();
    check_g(m, g)?;
    let upper = &p.coeffs()[1..];
    let mut astar: Vec<Matrix> = Vec::with_capacity(upper.len());
    for a in upper.iter().rev() {
        let next = match astar.last() {
            Some(prev) => &(prev * g) + a,
            None => a.clone(),
        };
        astar.push(next);
    }
    astar.reverse();
    let mut v = Matrix::zeros(m, m);
    for a in &astar {
        v += a;
    }
    let h = &Matrix::identity(m) - &v;
    Ok(StarMatrices { astar, v, h })
}

/// Running sums `I, I + G, I + G + G^2, ...` on demand.
struct PowerSums<'a> {
    g: &'a Matrix,
    power: Matrix,
    sum: Matrix,
}

impl<'a> PowerSums<'a> {
    /// Starts at `sum_{j<1} G^j = I`.
    fn new(g: &'a Matrix) -> Self {
        let m = g.rows();
        PowerSums { g, power: Matrix::identity(m), sum: Matrix::identity(m) }
    }

    fn advance(&mut self) {
        self.power = &self.power * self.g;
        self.sum += &self.power;
    }
}

/// `F = sum_{l=0}^q A_l(G) sum_{j<=l} G^j`, `N = sum_l sum_{i>=1} A_{l,i} sum_{j<i} G^j`, `M = I - F`.
pub fn compute_fmn(e: &Embedding, g: &Matrix) -> Result<Splitting> {
    let m = e.block_size();
    check_g(m, g)?;
    let mut f = Matrix::zeros(m, m);
    let mut sums = PowerSums::new(g);
    for l in 0..=e.q() {
        if l > 0 {
            sums.advance();
        }
        let al = e.eval_coefficient(l, g)?;
        al.mul_add_into(&sums.sum, &mut f);
    }
    let mut n = Matrix::zeros(m, m);
    for l in -1..=e.q() {
        let series = e.series_of(l);
        let mut sums = PowerSums::new(g);
        for (i, a) in series.iter().enumerate().skip(1) {
            if i > 1 {
                sums.advance();
            }
            a.mul_add_into(&sums.sum, &mut n);
        }
    }
    let mm = &Matrix::identity(m) - &f;
    Ok(Splitting { f, m: mm, n })
}

fn rho_of_solve(a: &Matrix, b: &Matrix) -> Result<f64> {
    spectral_radius(&Lu::new(a)?.solve(b)?)
}

/// `rho(M^{-1}N)` with the check against `rho(H^{-1}N) / (1 + rho(H^{-1}N))`.
pub fn convergence_rate(e: &Embedding, p: &MatrixPolynomial, g: &Matrix) -> Result<RateIdentity> {
    let star = compute_star_matrices(p, g)?;
    let split = compute_fmn(e, g)?;
    rate_from_parts(&star.h, &split)
}

fn rate_from_parts(h: &Matrix, split: &Splitting) -> Result<RateIdentity> {
    let rho_minv_n = rho_of_solve(&split.m, &split.n)?;
    let rho_hinv_n = rho_of_solve(h, &split.n)?;
    let identity_residual = (rho_minv_n - rho_hinv_n / (1.0 + rho_hinv_n)).abs();
    Ok(RateIdentity { rho_minv_n, rho_hinv_n, identity_residual })
}

/// `B_i^* = sum_{j=i}^q A_j(G) G^{j-i}` for `i = 0..=q` (empty for `q = -1`).
pub fn compute_bstar(e: &Embedding, g: &Matrix) -> Result<Vec<Matrix>> {
    check_g(e.block_size(), g)?;
    let mut out: Vec<Matrix> = Vec::new();
    for l in (0..=e.q()).rev() {
        let al = e.eval_coefficient(l, g)?;
        let next = match out.last() {
            Some(prev) => &(prev * g) + &al,
            None => al,
        };
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// Smallest-modulus root outside the closed unit disk of `det(I - sum_i K_i z^i)`,
/// where `coeffs = [K_0, K_1, ..., K_n]`.
///
/// With `C_i = (I - K_0)^{-1} K_i`, the roots are `z = 1/theta` for the nonzero
/// eigenvalues `theta` of the block companion matrix of
/// `theta^n I - C_1 theta^{n-1} - ... - C_n`. A determinant without finite roots
/// (every `theta` exactly zero) gives `+inf`.
pub fn smallest_root_outside_disk(coeffs: &[Matrix]) -> Result<f64> {
    let (k0, rest) = coeffs.split_first().ok_or_else(|| Error::NoRootOutsideDisk("empty polynomial".into()))?;
    let m = k0.rows();
    let n = rest.len();
    if n == 0 {
        return Err(Error::NoRootOutsideDisk("constant polynomial has no roots".into()));
    }
    let dim = n * m;
    if dim > COMPANION_LIMIT {
        return Err(Error::SizeGuard(format!("companion matrix of order {dim} exceeds the limit {COMPANION_LIMIT}")));
    }
    let lu = Lu::new(&(&Matrix::identity(m) - k0))?;
    let mut comp = Matrix::zeros(dim, dim);
    for (b, k) in rest.iter().enumerate() {
        let c = lu.solve(k)?;
        for i in 0..m {
            for j in 0..m {
                comp[(i, b * m + j)] = c[(i, j)];
            }
        }
    }
    for i in m..dim {
        comp[(i, i - m)] = 1.0;
    }
    let limit = 1.0 / (1.0 + ROOT_FILTER);
    let moduli: Vec<f64> = eigenvalues(&comp)?.into_iter().map(|(re, im)| re.hypot(im)).collect();
    if moduli.iter().all(|&t| t == 0.0) {
        // det is constant: no finite roots at all
        return Ok(f64::INFINITY);
    }
    let best = moduli.into_iter().filter(|&t| t > 0.0 && t < limit).fold(0.0f64, f64::max);
    if best == 0.0 {
        return Err(Error::NoRootOutsideDisk(
            "no eigenvalue of the companion matrix maps outside the unit disk".into(),
        ));
    }
    Ok(1.0 / best)
}

/// `xi` from `U(z) = I - sum_i A_i^* z^i` and `xi_q` from `U_q(z) = I - sum_{i<=q} B_i^* z^i`.
pub fn xi_roots(p: &MatrixPolynomial, e: &Embedding, g: &Matrix) -> (Result<f64>, Result<f64>) {
    let xi = compute_star_matrices(p, g).and_then(|s| smallest_root_outside_disk(&s.astar));
    let xi_q = compute_bstar(e, g).and_then(|b| smallest_root_outside_disk(&b));
    (xi, xi_q)
}

/// `S_q(z) = I - sum_{l=-1}^q A_l(G) z^l`.
pub fn eval_sq(e: &Embedding, g: &Matrix, z: f64) -> Result<Matrix> {
    let m = e.block_size();
    let mut s = Matrix::identity(m);
    for l in -1..=e.q() {
        s.axpy(-z.powi(l as i32), &e.eval_coefficient(l, g)?);
    }
    Ok(s)
}

/// `U_q(z) = I - sum_{i=0}^q B_i^* z^i`.
pub fn eval_uq(bstar: &[Matrix], z: f64) -> Matrix {
    let m = bstar.first().map_or(0, Matrix::rows);
    let mut u = Matrix::identity(m.max(1));
    for (i, b) in bstar.iter().enumerate() {
        u.axpy(-z.powi(i as i32), b);
    }
    u
}

/// `max |U_q(z) (I - G/z) - S_q(z)|` at the point `z`.
pub fn factorization_defect(e: &Embedding, g: &Matrix, z: f64) -> Result<f64> {
    let bstar = compute_bstar(e, g)?;
    let m = e.block_size();
    let uq = if bstar.is_empty() { Matrix::identity(m) } else { eval_uq(&bstar, z) };
    let mut right = Matrix::identity(m);
    right.axpy(-1.0 / z, g);
    Ok((&uq * &right).max_abs_diff(&eval_sq(e, g, z)?))
}

/// All diagnostics for one embedding at `G`. Root failures are kept per field.
pub fn rate_estimates(p: &MatrixPolynomial, e: &Embedding, g: &Matrix) -> Result<RateEstimates> {
    let star = compute_star_matrices(p, g)?;
    let split = compute_fmn(e, g)?;
    let rate = rate_from_parts(&star.h, &split)?;
    let bstar = compute_bstar(e, g)?;
    let xi = smallest_root_outside_disk(&star.astar);
    let xi_q = smallest_root_outside_disk(&bstar);
    Ok(RateEstimates {
        astar: star.astar,
        v: star.v,
        h: star.h,
        f: split.f,
        m: split.m,
        n: split.n,
        rho_minv_n: rate.rho_minv_n,
        rho_hinv_n: rate.rho_hinv_n,
        bstar,
        xi,
        xi_q,
    })
}

/// `Q(G,G)`, `P(G)` and `W = (I - Q)^{-1} P` assembled explicitly.
pub fn kron_rate(e: &Embedding, g: &Matrix) -> Result<KronRate> {
    let m = e.block_size();
    check_g(m, g)?;
    if m > KRON_BLOCK_LIMIT {
        return Err(Error::SizeGuard(format!("Kronecker rate needs m <= {KRON_BLOCK_LIMIT}, got {m}")));
    }
    let longest = (-1..=e.q()).map(|l| l + e.series_of(l).len() as isize).max().unwrap_or(0);
    let gpow = g.powers(longest.max(e.q()).max(0) as usize + 1);
    let gt: Vec<Matrix> = gpow.iter().map(Matrix::transpose).collect();
    let mm = m * m;

    let mut q_gg = Matrix::zeros(mm, mm);
    for l in 0..=e.q() {
        let al = e.eval_coefficient(l, g)?;
        for s in 0..=l {
            let right = &al * &gpow[(l - s) as usize];
            q_gg += &gt[s as usize].kron(&right)?;
        }
    }

    // sum_{i>=1} sum_{t<i} (G^{l+1+t})^T (x) A_{l,i} G^{i-1-t}
    //   = sum_t (G^{l+1+t})^T (x) R_t,  R_t = A_{l,t+1} + R_{t+1} G
    let mut p_g = Matrix::zeros(mm, mm);
    for l in -1..=e.q() {
        let series = e.series_of(l);
        let mut r: Option<Matrix> = None;
        for t in (0..series.len().saturating_sub(1)).rev() {
            let a = &series[t + 1];
            let next = match r {
                Some(prev) => &(&prev * g) + a,
                None => a.clone(),
            };
            if next.max_abs() != 0.0 {
                p_g += &gt[(l + 1 + t as isize) as usize].kron(&next)?;
            }
            r = Some(next);
        }
    }

    let w = Lu::new(&(&Matrix::identity(mm) - &q_gg))?.solve(&p_g)?;
    let rho_w = spectral_radius(&w)?;
    Ok(KronRate { q_gg, p_g, w, rho_w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Strategy;

    fn scalar_case() -> (MatrixPolynomial, Matrix) {
        (MatrixPolynomial::scalar(&[0.6, 0.1, 0.3]).unwrap(), Matrix::scalar(1.0))
    }

    #[test]
    fn star_matrices_scalar() {
        let (p, g) = scalar_case();
        let s = compute_star_matrices(&p, &g).unwrap();
        assert!((s.astar[0][(0, 0)] - 0.4).abs() < 1e-15);
        assert!((s.astar[1][(0, 0)] - 0.3).abs() < 1e-15);
        assert!((s.v[(0, 0)] - 0.7).abs() < 1e-15);
        assert!((s.h[(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn star_matrices_without_up_jumps() {
        let p = MatrixPolynomial::new(vec![Matrix::identity(2)]).unwrap();
        let s = compute_star_matrices(&p, &Matrix::identity(2)).unwrap();
        assert!(s.astar.is_empty());
        assert_eq!(s.v, Matrix::zeros(2, 2));
        assert_eq!(s.h, Matrix::identity(2));
    }

    #[test]
    fn ubased_splitting_scalar() {
        let (p, g) = scalar_case();
        let e = Embedding::new(&p, Strategy::UBased).unwrap();
        let s = compute_fmn(&e, &g).unwrap();
        assert!((s.f[(0, 0)] - 0.4).abs() < 1e-15);
        assert!((s.m[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((s.n[(0, 0)] - 0.3).abs() < 1e-15);
        let r = convergence_rate(&e, &p, &g).unwrap();
        assert!((r.rho_minv_n - 0.5).abs() < 1e-14);
        assert!((r.rho_hinv_n - 1.0).abs() < 1e-14);
        assert!(r.identity_residual < 1e-14);
    }

    #[test]
    fn natural_has_identity_m() {
        let (p, g) = scalar_case();
        let e = Embedding::new(&p, Strategy::Natural).unwrap();
        let s = compute_fmn(&e, &g).unwrap();
        assert_eq!(s.f[(0, 0)], 0.0);
        assert_eq!(s.m[(0, 0)], 1.0);
        let r = convergence_rate(&e, &p, &g).unwrap();
        assert!((r.rho_minv_n - s.n[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn scalar_xi_is_two() {
        let (p, g) = scalar_case();
        let e = Embedding::new(&p, Strategy::Optimal { q: 1 }).unwrap();
        let (xi, xi_q) = xi_roots(&p, &e, &g);
        assert!((xi.unwrap() - 2.0).abs() < 1e-12);
        assert!((xi_q.unwrap() - 2.0).abs() < 1e-12);
        let ub = Embedding::new(&p, Strategy::UBased).unwrap();
        assert!(xi_roots(&p, &ub, &g).1.is_err());
        // det U(z) = 1 - A_0^* has no roots
        let flat = MatrixPolynomial::scalar(&[0.2, 0.8, 0.0]).unwrap();
        let e = Embedding::new(&flat, Strategy::Optimal { q: 1 }).unwrap();
        assert_eq!(xi_roots(&flat, &e, &Matrix::scalar(1.0)).0.unwrap(), f64::INFINITY);
    }

    #[test]
    fn factorization_holds_at_sample_points() {
        let (p, g) = scalar_case();
        for s in [Strategy::UBased, Strategy::Optimal { q: 1 }, Strategy::Traditional] {
            let e = Embedding::new(&p, s).unwrap();
            for z in [0.5, 1.0, 2.0] {
                assert!(factorization_defect(&e, &g, z).unwrap() < 1e-14, "{s} at {z}");
            }
        }
    }

    #[test]
    fn kron_rate_scalar_equals_splitting_rate() {
        let p = MatrixPolynomial::scalar(&[0.5, 0.2, 0.2, 0.1]).unwrap();
        let stop = crate::solver::StopConfig::default();
        let g = crate::solver::classical_solve(&p, Strategy::UBased, &Matrix::scalar(0.0), &stop).unwrap().g;
        for s in [Strategy::Natural, Strategy::Traditional, Strategy::UBased, Strategy::Optimal { q: 1 }] {
            let e = Embedding::new(&p, s).unwrap();
            let k = kron_rate(&e, &g).unwrap();
            let r = convergence_rate(&e, &p, &g).unwrap();
            assert!((k.rho_w - r.rho_minv_n).abs() < 1e-12, "{s}: {} vs {}", k.rho_w, r.rho_minv_n);
        }
    }

    #[test]
    fn companion_guard() {
        let coeffs: Vec<Matrix> = (0..3).map(|_| Matrix::zeros(1001, 1001)).collect();
        assert!(matches!(smallest_root_outside_disk(&coeffs), Err(Error::SizeGuard(_))));
    }
}
