//! Benchmark models: a circulant family with prescribed drift and a PH/PH/1
//! queue with Erlang service and a pseudo heavy-tailed arrival process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::kv::KvList;
use crate::model::MatrixPolynomial;
use crate::numkernel::{Lu, Matrix};

/// Parameters of the circulant family.
///
/// Weights: `v_i = theta s1^{i-1} / i` for `i = 1..d-1` with `theta` fixed by
/// `sum_{i>=1} i v_i = (1 + mu)/2`, `v_{-1} = (1 - mu)/2` and `v_0` the remainder.
/// Then `sum v = 1` and `-v_{-1} + sum i v_i = mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub d: usize,
    pub mu: f64,
    pub s1: f64,
    pub s2: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { m: 8, d: 50, mu: -0.1, s1: 0.6, s2: 0.9995, sigma: 0.0, seed: 1 }
    }
}

impl SyntheticSpec {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if !(self.s1 > 0.0 && self.s1 < 1.0) {
            return bad(format!("s1 must lie in (0, 1), got {}", self.s1));
        }
        if !(self.s2 > 0.0 && self.s2 < 1.0) {
            return bad(format!("s2 must lie in (0, 1), got {}", self.s2));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be finite and nonnegative, got {}", self.sigma));
        }
        if !self.mu.is_finite() {
            return bad("mu must be finite".into());
        }
        Ok(())
    }

    /// `[v_{-1}, v_0, ..., v_{d-1}]`.
    pub fn weights(&self) -> Result<Vec<f64>> {
        self.check()?;
        let mu = self.mu;
        if !(-1.0..=1.0).contains(&mu) {
            return Err(Error::Infeasible(format!("no nonnegative weights have drift {mu}")));
        }
        let d = self.d;
        let up = (1.0 + mu) / 2.0;
        if d < 2 && up != 0.0 {
            return Err(Error::Infeasible(format!("degree {d} has no up-jumps, so drift {mu} is unreachable")));
        }
        let geo: f64 = (1..d).map(|i| self.s1.powi(i as i32 - 1)).sum();
        let theta = if d < 2 { 0.0 } else { up / geo };
        let mut v = vec![0.0; d + 1];
        v[0] = (1.0 - mu) / 2.0;
        let mut upper = 0.0;
        for i in 1..d {
            let w = theta * self.s1.powi(i as i32 - 1) / i as f64;
            v[i + 1] = w;
            upper += w;
        }
        v[1] = up - upper;
        if v[1] < 0.0 {
            return Err(Error::Infeasible(format!("weight v_0 = {} is negative", v[1])));
        }
        Ok(v)
    }

    pub fn to_kv(&self) -> KvList {
        let mut kv = KvList::new();
        kv.push("kind", "synthetic");
        kv.push("m", self.m);
        kv.push("d", self.d);
        kv.push_f64("mu", self.mu);
        kv.push_f64("s1", self.s1);
        kv.push_f64("s2", self.s2);
        kv.push_f64("sigma", self.sigma);
        kv.push("seed", self.seed);
        kv
    }

    pub fn from_kv(kv: &KvList) -> Result<Self> {
        Ok(SyntheticSpec {
            m: kv.parse("m")?,
            d: kv.parse("d")?,
            mu: kv.parse("mu")?,
            s1: kv.parse("s1")?,
            s2: kv.parse("s2")?,
            sigma: kv.parse("sigma")?,
            seed: kv.parse("seed")?,
        })
    }
}

/// `C^k` for the cyclic shift with `c_{ij} = 1` iff `j - i = 1 (mod m)`.
pub fn circulant_power(m: usize, k: isize) -> Matrix {
    let shift = k.rem_euclid(m as isize) as usize;
    Matrix::from_fn(m, m, |i, j| if (i + shift) % m == j { 1.0 } else { 0.0 })
}

/// Builds `A_i = D^{-1} (v_i C^i + sigma s2^{m(i+1)} R_i Delta)`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<MatrixPolynomial> {
    let v = spec.weights()?;
    let m = spec.m;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let delta: Vec<f64> = (0..m).map(|j| spec.s2.powi(j as i32)).collect();
    let mut coeffs = Vec::with_capacity(v.len());
    for (k, &w) in v.iter().enumerate() {
        let i = k as isize - 1;
        let mut a = circulant_power(m, i).scale(w);
        if spec.sigma > 0.0 {
            let amp = spec.sigma * spec.s2.powf((m * k) as f64);
            for r in 0..m {
                for c in 0..m {
                    let x: f64 = rng.random();
                    a[(r, c)] += amp * x * delta[c];
                }
            }
        }
        coeffs.push(a);
    }
    let mut rows = vec![0.0; m];
    for a in &coeffs {
        for (r, s) in a.row_sums().into_iter().enumerate() {
            rows[r] += s;
        }
    }
    for a in &mut coeffs {
        for (r, &s) in rows.iter().enumerate() {
            for c in 0..m {
                a[(r, c)] /= s;
            }
        }
    }
    MatrixPolynomial::new(coeffs)
}

/// Parameters of the PH/PH/1 queue.
#[derive(Debug, Clone, PartialEq)]
pub struct PhPhSpec {
    /// Order of the arrival PH.
    pub n1: usize,
    /// Order of the Erlang service PH.
    pub n2: usize,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub rho: f64,
    /// Truncate once the norm of the neglected tail is at most this.
    pub trunc_tol: f64,
    /// Keep exactly this degree instead of truncating by `trunc_tol`.
    pub degree: Option<usize>,
}

impl Default for PhPhSpec {
    fn default() -> Self {
        PhPhSpec { n1: 10, n2: 10, lambda: 10.0, a: 2.0, b: 1.0, c: 1.5, rho: 0.85, trunc_tol: 1e-16, degree: None }
    }
}

fn check_heavy_tail(n1: usize, a: f64, b: f64, c: f64) -> Result<()> {
    if n1 == 0 {
        return Err(Error::InvalidSpec("n1 must be positive".into()));
    }
    if !(a > 1.0 && a > b && b > 0.0 && c > 0.0) || !a.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "heavy-tail parameters need a > 1, a > b > 0, c > 0 (got a = {a}, b = {b}, c = {c})"
        )));
    }
    Ok(())
}

impl PhPhSpec {
    pub fn check(&self) -> Result<()> {
        check_heavy_tail(self.n1, self.a, self.b, self.c)?;
        if self.n2 == 0 {
            return Err(Error::InvalidSpec("n2 must be positive".into()));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "load rho = {} is outside (0, 1); the queue is unstable",
                self.rho
            )));
        }
        if !(self.trunc_tol > 0.0) {
            return Err(Error::InvalidSpec("trunc_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvList {
        let mut kv = KvList::new();
        kv.push("kind", "phph");
        kv.push("n1", self.n1);
        kv.push("n2", self.n2);
        kv.push_f64("lambda", self.lambda);
        kv.push_f64("a", self.a);
        kv.push_f64("b", self.b);
        kv.push_f64("c", self.c);
        kv.push_f64("rho", self.rho);
        kv.push_f64("trunc_tol", self.trunc_tol);
        if let Some(d) = self.degree {
            kv.push("degree", d);
        }
        kv
    }

    pub fn from_kv(kv: &KvList) -> Result<Self> {
        Ok(PhPhSpec {
            n1: kv.parse("n1")?,
            n2: kv.parse("n2")?,
            lambda: kv.parse("lambda")?,
            a: kv.parse("a")?,
            b: kv.parse("b")?,
            c: kv.parse("c")?,
            rho: kv.parse("rho")?,
            trunc_tol: kv.parse("trunc_tol")?,
            degree: kv.parse_opt("degree")?,
        })
    }
}

/// Erlang subgenerator: `-lambda` on the diagonal, `lambda` on the superdiagonal.
pub fn erlang_ph(n: usize, lambda: f64) -> (Vec<f64>, Matrix) {
    let s = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            -lambda
        } else if j == i + 1 {
            lambda
        } else {
            0.0
        }
    });
    let mut beta = vec![0.0; n];
    beta[0] = 1.0;
    (beta, s)
}

/// Pseudo heavy-tailed PH, scaled to unit mean.
///
/// State 1 exits at rate `c` and moves to state `i` at rate `a^{1-i}`; state `i >= 2`
/// returns to state 1 at rate `(b/a)^{i-1}`.
pub fn heavy_tail_ph(n1: usize, a: f64, b: f64, c: f64) -> Result<(Vec<f64>, Matrix)> {
    check_heavy_tail(n1, a, b, c)?;
    let s_a: f64 = (1..n1).map(|k| a.powi(-(k as i32))).sum();
    let mut q = Matrix::zeros(n1, n1);
    q[(0, 0)] = -(c + s_a);
    for i in 1..n1 {
        let back = (b / a).powi(i as i32);
        q[(0, i)] = a.powi(-(i as i32));
        q[(i, 0)] = back;
        q[(i, i)] = -back;
    }
    let mut tau = vec![0.0; n1];
    tau[0] = 1.0;
    let mean = -Lu::new(&q)?.solve(&Matrix::ones_col(n1))?[(0, 0)];
    Ok((tau, q.scale(mean)))
}

/// Mean absorption time `-tau^T T^{-1} 1`.
pub fn ph_mean(tau: &[f64], t: &Matrix) -> Result<f64> {
    let x = Lu::new(t)?.solve(&Matrix::ones_col(t.rows()))?;
    Ok(-tau.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum::<f64>())
}

fn outer(col: &[f64], row: &[f64]) -> Matrix {
    Matrix::from_fn(col.len(), row.len(), |i, j| col[i] * row[j])
}

fn exit_vector(t: &Matrix) -> Vec<f64> {
    t.row_sums().into_iter().map(|s| -s).collect()
}

/// The generated queue with the norm of the neglected tail.
#[derive(Debug, Clone, PartialEq)]
pub struct PhPhModel {
    pub model: MatrixPolynomial,
    /// `||sum_{h >= d} A_h||_inf` for the returned degree `d`.
    pub tail_norm: f64,
}

/// PH/PH/1 chain observed at departures, truncated to a polynomial.
pub fn gen_phph(spec: &PhPhSpec) -> Result<MatrixPolynomial> {
    Ok(gen_phph_detailed(spec)?.model)
}

const PHPH_MAX_DEGREE: usize = 100_000;

pub fn gen_phph_detailed(spec: &PhPhSpec) -> Result<PhPhModel> {
    spec.check()?;
    let (n1, n2) = (spec.n1, spec.n2);
    let (tau, t0) = heavy_tail_ph(n1, spec.a, spec.b, spec.c)?;
    let (beta, s) = erlang_ph(n2, spec.lambda);
    let t = t0.scale(spec.rho);
    let t_exit = exit_vector(&t);
    let s_exit = exit_vector(&s);
    let i1 = Matrix::identity(n1);
    let i2 = Matrix::identity(n2);
    let sum = &t.kron(&i2)? + &i1.kron(&s)?;
    let lu = Lu::new(&sum)?;
    let m1 = -&lu.solve(&outer(&t_exit, &tau).kron(&i2)?)?;
    let m0 = -&lu.solve(&i1.kron(&outer(&s_exit, &beta))?)?;
    let left = i1.kron(&Matrix::from_vec(1, n2, beta.clone())?)?;
    let right = i1.kron(&Matrix::ones_col(n2))?;
    let nn = n1 * n2;

    // tail from A_h on: L M1^{h+1} (I - M1)^{-1} M0 R
    let mut tail_mid = Lu::new(&(&Matrix::identity(nn) - &m1))?.solve(&m0)?;
    let mut mid = m0;
    let mut coeffs = Vec::new();
    loop {
        let tail_norm = (&(&left * &tail_mid) * &right).inf_norm();
        let d = coeffs.len();
        let done = match spec.degree {
            Some(fixed) => d == fixed + 1,
            None => d > 0 && tail_norm <= spec.trunc_tol,
        };
        if done {
            return Ok(PhPhModel { model: MatrixPolynomial::new(coeffs)?, tail_norm });
        }
        if d > PHPH_MAX_DEGREE {
            return Err(Error::NoConvergence { what: "PH/PH/1 truncation".into(), iterations: d });
        }
        coeffs.push(&(&left * &mid) * &right);
        mid = &m1 * &mid;
        tail_mid = &m1 * &tail_mid;
    }
}
