//! Functional iterations for `G`.
//!
//! [`classical_solve`] runs the natural, traditional and U-based recurrences
//! directly. [`outer_solve`] runs the iteration defined by an arbitrary
//! [`Embedding`]: each outer step freezes `A_l(X_k)` and approximates the minimal
//! solution of `Z = sum_l A_l(X_k) Z^{l+1}` with the U-based inner iteration
//! started from `Z_0 = X_k`.

use std::fmt;
use std::time::{Duration, Instant};

use crate::embedding::{Embedding, Strategy};
use crate::error::{Error, Result};
use crate::model::{horner, MatrixPolynomial};
use crate::numkernel::{Lu, Matrix, UNIT_ROUNDOFF};

/// Entries of `X_{k+1} - X_k` below `-MONOTONE_SLACK` raise the monotonicity warning.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Stopping rules shared by the outer and inner iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopConfig {
    /// Target for the outer residual.
    pub epsilon: f64,
    /// Unit roundoff.
    pub u: f64,
    /// A residual above `previous * divergence_factor` counts as stagnation.
    pub divergence_factor: f64,
    pub max_outer: usize,
    pub max_inner_per_outer: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            epsilon: 1e-15,
            u: UNIT_ROUNDOFF,
            divergence_factor: 1.0 + 1e-3,
            max_outer: 1_000_000,
            max_inner_per_outer: 100_000,
        }
    }
}

impl StopConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        StopConfig { epsilon, ..Default::default() }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidSpec(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::InvalidSpec(format!("divergence factor must exceed 1, got {}", self.divergence_factor)));
        }
        if self.max_outer == 0 || self.max_inner_per_outer == 0 {
            return Err(Error::InvalidSpec("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// Inner tolerance `max{delta_k / 10, 4u, epsilon / 4}`.
    pub fn inner_tolerance(&self, delta_k: f64) -> f64 {
        (delta_k / 10.0).max(4.0 * self.u).max(self.epsilon / 4.0)
    }

    /// Noise-floor threshold for a stagnation exit.
    pub fn noise_floor(&self) -> f64 {
        10.0 * self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Residual dropped below epsilon.
    Converged,
    /// Residual stopped decreasing but is within `10 * epsilon`.
    NoiseFloor,
    /// Residual stopped decreasing above the noise floor.
    Stagnated,
    MaxIterations,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        matches!(self, Termination::Converged | Termination::NoiseFloor)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::NoiseFloor => "converged (stagnated at noise floor)",
            Termination::Stagnated => "stagnated",
            Termination::MaxIterations => "max_iterations",
        })
    }
}

/// One completed outer step, passed to trace callbacks.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub k: usize,
    pub delta: f64,
    pub inner_iters: usize,
    pub elapsed: Duration,
    pub iterate: &'a Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub g: Matrix,
    pub outer_count: usize,
    /// Inner iterations spent on each outer step.
    pub inner_counts: Vec<usize>,
    /// `delta_0, delta_1, ..., delta_{outer_count}`.
    pub residual_history: Vec<f64>,
    pub termination: Termination,
    /// `(delta_N / delta_0)^{1/N}` for the final step `N`.
    pub avg_rate: f64,
    /// Most negative entry of `X_{k+1} - X_k` seen (0 when monotone). Only
    /// tracked when `X_0 = 0`.
    pub monotonicity_violation: f64,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn inner_total(&self) -> usize {
        self.inner_counts.iter().sum()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history always holds delta_0")
    }

    pub fn converged(&self) -> bool {
        self.termination.is_converged()
    }

    /// `r_k = (delta_k / delta_0)^{1/k}`.
    pub fn rate_at(&self, k: usize) -> Option<f64> {
        if k == 0 || k >= self.residual_history.len() {
            return None;
        }
        Some(average_rate(self.residual_history[0], self.residual_history[k], k))
    }

    /// True when `X_0 = 0` and some iterate decreased by more than [`MONOTONE_SLACK`].
    pub fn non_monotone(&self) -> bool {
        self.monotonicity_violation < -MONOTONE_SLACK
    }
}

fn average_rate(d0: f64, dk: f64, k: usize) -> f64 {
    if d0 == 0.0 {
        return 0.0;
    }
    (dk / d0).powf(1.0 / k as f64)
}

fn check_start(p: &MatrixPolynomial, x0: &Matrix) -> Result<()> {
    let m = p.block_size();
    if x0.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "starting matrix is {}x{}, model block size is {m}",
            x0.rows(),
            x0.cols()
        )));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidModel("starting matrix has non-finite entries".into()));
    }
    Ok(())
}

fn min_increment(next: &Matrix, prev: &Matrix) -> f64 {
    next.as_slice().iter().zip(prev.as_slice()).map(|(a, b)| a - b).fold(0.0, f64::min)
}

/// Bookkeeping shared by the classical and embedded drivers.
struct Driver<'a> {
    p: &'a MatrixPolynomial,
    stop: StopConfig,
    track_monotone: bool,
    x: Matrix,
    history: Vec<f64>,
    inner_counts: Vec<usize>,
    violation: f64,
    start: Instant,
}

impl<'a> Driver<'a> {
    fn new(p: &'a MatrixPolynomial, x0: &Matrix, stop: StopConfig) -> Result<Self> {
        stop.check()?;
        check_start(p, x0)?;
        let d0 = p.residual(x0)?;
        Ok(Driver {
            p,
            stop,
            track_monotone: x0.max_abs() == 0.0,
            x: x0.clone(),
            history: vec![d0],
            inner_counts: Vec::new(),
            violation: 0.0,
            start: Instant::now(),
        })
    }

    fn delta(&self) -> f64 {
        *self.history.last().unwrap()
    }

    fn converged_at_start(&self) -> bool {
        self.delta() < self.stop.epsilon
    }

    /// Accepts `next`; returns the termination if the iteration should stop.
    fn accept(&mut self, next: Matrix, inner: usize, trace: &mut dyn FnMut(&Step<'_>)) -> Result<Option<Termination>> {
        if !next.is_finite() {
            return Err(Error::NoConvergence {
                what: "iterate became non-finite".into(),
                iterations: self.inner_counts.len() + 1,
            });
        }
        if self.track_monotone {
            self.violation = self.violation.min(min_increment(&next, &self.x));
        }
        let prev = self.delta();
        let delta = self.p.residual(&next)?;
        self.x = next;
        self.history.push(delta);
        self.inner_counts.push(inner);
        let k = self.inner_counts.len();
        trace(&Step { k, delta, inner_iters: inner, elapsed: self.start.elapsed(), iterate: &self.x });
        Ok(if delta < self.stop.epsilon {
            Some(Termination::Converged)
        } else if delta > prev * self.stop.divergence_factor {
            Some(if delta <= self.stop.noise_floor() { Termination::NoiseFloor } else { Termination::Stagnated })
        } else if k >= self.stop.max_outer {
            Some(Termination::MaxIterations)
        } else {
            None
        })
    }

    fn finish(self, termination: Termination) -> SolveReport {
        let n = self.inner_counts.len();
        let avg_rate = if n == 0 { 0.0 } else { average_rate(self.history[0], self.history[n], n) };
        SolveReport {
            g: self.x,
            outer_count: n,
            inner_counts: self.inner_counts,
            residual_history: self.history,
            termination,
            avg_rate,
            monotonicity_violation: self.violation,
            elapsed: self.start.elapsed(),
        }
    }
}

/// Runs one of the three classical iterations.
pub fn classical_solve(p: &MatrixPolynomial, variant: Strategy, x0: &Matrix, stop: &StopConfig) -> Result<SolveReport> {
    classical_solve_traced(p, variant, x0, stop, &mut |_| {})
}

pub fn classical_solve_traced(
    p: &MatrixPolynomial,
    variant: Strategy,
    x0: &Matrix,
    stop: &StopConfig,
    trace: &mut dyn FnMut(&Step<'_>),
) -> Result<SolveReport> {
    if !variant.is_classical() {
        return Err(Error::InvalidEmbedding(format!("`{variant}` is not a classical iteration")));
    }
    let mut drv = Driver::new(p, x0, *stop)?;
    if drv.converged_at_start() {
        return Ok(drv.finish(Termination::Converged));
    }
    let m = p.block_size();
    let coeffs = p.coeffs();
    let a_minus = &coeffs[0];
    // traditional: (I - A_0) X = A(X) - A_0 X, factored once
    let (trad_lu, trad_coeffs) = if variant == Strategy::Traditional {
        let mut c = coeffs.to_vec();
        let a0 = match c.get_mut(1) {
            Some(a0) => std::mem::replace(a0, Matrix::zeros(m, m)),
            None => Matrix::zeros(m, m),
        };
        (Some(Lu::new(&(&Matrix::identity(m) - &a0))?), c)
    } else {
        (None, Vec::new())
    };
    loop {
        let next = match variant {
            Strategy::Natural => horner(coeffs, &drv.x),
            Strategy::Traditional => {
                let rhs = horner(&trad_coeffs, &drv.x);
                trad_lu.as_ref().unwrap().solve(&rhs)?
            }
            _ => {
                let mut w = Matrix::identity(m);
                if coeffs.len() > 1 {
                    w -= &horner(&coeffs[1..], &drv.x);
                }
                Lu::new(&w)?.solve(a_minus)?
            }
        };
        if let Some(t) = drv.accept(next, 0, trace)? {
            return Ok(drv.finish(t));
        }
    }
}

/// Inner U-based iteration for `Z = c[0] + c[1] Z + ... + c[q+1] Z^{q+1}`,
/// where `c[l+1] = A_l(X_k)`.
///
/// Takes at least one step from `z0`. Returns the final iterate and the number
/// of steps; stagnation (a residual increase beyond the divergence factor)
/// ends the loop without error.
pub fn inner_solve(c: &[Matrix], z0: &Matrix, tol: f64, stop: &StopConfig) -> Result<(Matrix, usize)> {
    let m = z0.rows();
    let c_minus = &c[0];
    if c.len() == 1 {
        return Ok((c_minus.clone(), 0));
    }
    let upper = &c[1..];
    let solve_step = |s: &Matrix| -> Result<Matrix> {
        let w = &Matrix::identity(m) - s;
        Lu::new(&w)?.solve(c_minus)
    };
    if upper.len() == 1 {
        // linear in Z: one solve is exact
        return Ok((solve_step(&upper[0])?, 1));
    }
    let mut s = horner(upper, z0);
    let mut prev = f64::INFINITY;
    let mut z = Matrix::zeros(m, m);
    let mut sz = Matrix::zeros(m, m);
    for nu in 1..=stop.max_inner_per_outer {
        z = solve_step(&s)?;
        s = horner(upper, &z);
        s.mul_into(&z, &mut sz);
        sz += c_minus;
        let res = (&z - &sz).inf_norm() / m as f64;
        if !res.is_finite() {
            return Err(Error::NoConvergence { what: "inner iteration diverged".into(), iterations: nu });
        }
        if res < tol || res > prev * stop.divergence_factor {
            return Ok((z, nu));
        }
        prev = res;
    }
    Ok((z, stop.max_inner_per_outer))
}

/// Outer iteration for the embedding `e` of `p`.
pub fn outer_solve(p: &MatrixPolynomial, e: &Embedding, x0: &Matrix, stop: &StopConfig) -> Result<SolveReport> {
    outer_solve_traced(p, e, x0, stop, &mut |_| {})
}

pub fn outer_solve_traced(
    p: &MatrixPolynomial,
    e: &Embedding,
    x0: &Matrix,
    stop: &StopConfig,
    trace: &mut dyn FnMut(&Step<'_>),
) -> Result<SolveReport> {
    if e.block_size() != p.block_size() {
        return Err(Error::DimensionMismatch("embedding and model block sizes differ".into()));
    }
    let mut drv = Driver::new(p, x0, *stop)?;
    if drv.converged_at_start() {
        return Ok(drv.finish(Termination::Converged));
    }
    let stationary = e.is_stationary();
    let constant: Option<Vec<Matrix>> = if stationary { Some(e.eval_all(x0)?) } else { None };
    loop {
        let c = match &constant {
            Some(c) => c.clone(),
            None => e.eval_all(&drv.x)?,
        };
        // a stationary embedding is solved to full accuracy in a single outer step
        let tol = if stationary { drv.stop.inner_tolerance(0.0) } else { drv.stop.inner_tolerance(drv.delta()) };
        let (next, inner) = inner_solve(&c, &drv.x, tol, &drv.stop)?;
        if let Some(t) = drv.accept(next, inner, trace)? {
            return Ok(drv.finish(t));
        }
    }
}

/// Builds the embedding for `strategy` and runs [`outer_solve`].
pub fn solve_with_strategy(
    p: &MatrixPolynomial,
    strategy: Strategy,
    x0: &Matrix,
    stop: &StopConfig,
) -> Result<SolveReport> {
    let e = Embedding::new(p, strategy)?;
    outer_solve(p, &e, x0, stop)
}
