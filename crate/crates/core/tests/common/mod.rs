#![allow(dead_code)]

use mg1::embedding::Strategy;
use mg1::model::MatrixPolynomial;
use mg1::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random nonnegative coefficients with row sums of `sum A_i` equal to `row_mass[r]`.
/// Down-jump weight is boosted by `down_bias` so that most draws are recurrent.
pub fn random_model(rng: &mut ChaCha8Rng, m: usize, d: usize, down_bias: f64, row_mass: &[f64]) -> MatrixPolynomial {
    let mut coeffs: Vec<Matrix> = (0..=d)
        .map(|k| {
            let scale = if k == 0 { down_bias } else { 1.0 / k as f64 };
            Matrix::from_fn(m, m, |_, _| {
                // keep some exact zeros so the supports vary
                if rng.random::<f64>() < 0.25 {
                    0.0
                } else {
                    scale * rng.random::<f64>()
                }
            })
        })
        .collect();
    let mut rows = vec![0.0; m];
    for a in &coeffs {
        for (r, s) in a.row_sums().into_iter().enumerate() {
            rows[r] += s;
        }
    }
    for a in &mut coeffs {
        for r in 0..m {
            let f = if rows[r] > 0.0 { row_mass[r] / rows[r] } else { 0.0 };
            for c in 0..m {
                a[(r, c)] *= f;
            }
        }
    }
    if rows.contains(&0.0) {
        // an all-zero row: put its mass on the diagonal of A_{-1}
        for r in 0..m {
            if rows[r] == 0.0 {
                coeffs[0][(r, r)] = row_mass[r];
            }
        }
    }
    MatrixPolynomial::new(coeffs).unwrap()
}

/// Stochastic model with negative drift and an irreducible `sum A_i`.
pub fn random_recurrent(rng: &mut ChaCha8Rng, max_m: usize, max_d: usize) -> MatrixPolynomial {
    loop {
        let m = rng.random_range(1..=max_m);
        let d = rng.random_range(2..=max_d);
        let bias = rng.random_range(1.5..4.0);
        let p = random_model(rng, m, d, bias, &vec![1.0; m]);
        match p.drift() {
            Ok(s) if s.mu < -0.02 && irreducible(&p.sum()) => return p,
            _ => continue,
        }
    }
}

/// Substochastic model: each row of `sum A_i` has mass in `[0.85, 1]`.
pub fn random_substochastic(rng: &mut ChaCha8Rng, max_m: usize, max_d: usize) -> MatrixPolynomial {
    let m = rng.random_range(1..=max_m);
    let d = rng.random_range(1..=max_d);
    let mass: Vec<f64> = (0..m).map(|_| rng.random_range(0.85..=1.0)).collect();
    let bias = rng.random_range(0.5..3.0);
    random_model(rng, m, d, bias, &mass)
}

fn irreducible(a: &Matrix) -> bool {
    let m = a.rows();
    (0..m).all(|s| {
        let mut seen = vec![false; m];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if a[(i, j)] > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&x| x)
    })
}

/// Every named strategy applicable to a degree-`d` model.
pub fn all_strategies(d: usize) -> Vec<Strategy> {
    let d = d as isize;
    let mut out = vec![Strategy::Natural, Strategy::Traditional, Strategy::UBased];
    for q in 1..d {
        out.push(Strategy::Optimal { q });
        for owner in -1..q {
            out.push(Strategy::Mass { owner, q });
        }
    }
    out
}

/// natural, traditional, ubased, optimal:1, ..., optimal:d-1.
pub fn rate_chain(d: usize) -> Vec<Strategy> {
    let mut out = vec![Strategy::Natural, Strategy::Traditional, Strategy::UBased];
    out.extend((1..d as isize).map(|q| Strategy::Optimal { q }));
    out
}
