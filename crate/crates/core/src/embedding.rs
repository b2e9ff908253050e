//! Embeddings of `A(z)` into a degree-`q+1` equation.
//!
//! An embedding is a family of nonnegative matrix series
//! `A_l(z) = sum_i A_{l,i} z^i`, `l = -1..=q`, with
//! `sum_l A_l(z) z^{l+1} = sum_i A_i z^{i+1}`. The fixed-point iteration
//! `X_{k+1} = sum_l A_l(X_k) X_{k+1}^{l+1}` it induces is one member of the family
//! implemented in [`crate::solver`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{horner, MatrixPolynomial};
use crate::numkernel::Matrix;

/// Named ways of building an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// `q = -1`, everything in `A_{-1}(z)`.
    Natural,
    /// `q = 0`, `A_0(z) = A_0`, nonlinear terms in `A_{-1}(z)`.
    Traditional,
    /// `q = 0`, `A_{-1}(z) = A_{-1}`, everything else in `A_0(z)`.
    UBased,
    /// Constant `A_l` for `l < q`, tail folded into `A_q(z)`.
    Optimal { q: isize },
    /// Constant `A_l` for `l <= q` except `owner`, which also absorbs every `A_i`, `i > q`.
    Mass { owner: isize, q: isize },
    /// Caller-supplied coefficients.
    Custom,
}

impl Strategy {
    pub fn q(&self) -> Option<isize> {
        match *self {
            Strategy::Natural => Some(-1),
            Strategy::Traditional | Strategy::UBased => Some(0),
            Strategy::Optimal { q } | Strategy::Mass { q, .. } => Some(q),
            Strategy::Custom => None,
        }
    }

    /// Coefficient index that receives the tail of the series.
    pub fn tail_owner(&self) -> Option<isize> {
        match *self {
            Strategy::Natural | Strategy::Traditional => Some(-1),
            Strategy::UBased => Some(0),
            Strategy::Optimal { q } => Some(q),
            Strategy::Mass { owner, .. } => Some(owner),
            Strategy::Custom => None,
        }
    }

    /// The classical iterations, which the solver can also run directly.
    pub fn is_classical(&self) -> bool {
        matches!(self, Strategy::Natural | Strategy::Traditional | Strategy::UBased)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Natural => write!(f, "natural"),
            Strategy::Traditional => write!(f, "traditional"),
            Strategy::UBased => write!(f, "ubased"),
            Strategy::Optimal { q } => write!(f, "optimal:{q}"),
            Strategy::Mass { owner, q } => write!(f, "mass:{owner}:{q}"),
            Strategy::Custom => write!(f, "custom"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidEmbedding(format!("unknown strategy `{s}`"));
        let int = |t: &str| t.trim().parse::<isize>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["natural"] => Ok(Strategy::Natural),
            ["traditional"] => Ok(Strategy::Traditional),
            ["ubased"] | ["u-based"] | ["u_based"] => Ok(Strategy::UBased),
            ["optimal", q] => Ok(Strategy::Optimal { q: int(q)? }),
            ["mass", owner, q] => Ok(Strategy::Mass { owner: int(owner)?, q: int(q)? }),
            _ => Err(bad()),
        }
    }
}

/// Coefficient series `A_{l}(z)` for `l = -1..=q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    m: usize,
    q: isize,
    strategy: Strategy,
    // series[l + 1] = [A_{l,0}, A_{l,1}, ...]
    series: Vec<Vec<Matrix>>,
}

/// Outcome of [`Embedding::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingReport {
    /// Most negative coefficient entry (0 when all are nonnegative).
    pub min_entry: f64,
    /// Largest entrywise violation of `A_i = sum_l A_{l, i-l}`.
    pub max_violation: f64,
    /// Jump index `i` where `max_violation` occurs.
    pub worst_jump: Option<isize>,
}

impl EmbeddingReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_entry >= 0.0 && self.max_violation <= tol
    }
}

fn padded(p: &MatrixPolynomial, jump: isize) -> Matrix {
    let m = p.block_size();
    p.coeff(jump).cloned().unwrap_or_else(|| Matrix::zeros(m, m))
}

impl Embedding {
    /// Builds the embedding for a named strategy.
    ///
    /// `q` must satisfy `-1 <= q <= max(d - 1, 0)`; coefficients beyond the degree
    /// of the model are zero.
    pub fn new(p: &MatrixPolynomial, strategy: Strategy) -> Result<Self> {
        let d = p.degree() as isize;
        let m = p.block_size();
        let q_max = (d - 1).max(0);
        let (owner, q) = match strategy {
            Strategy::Custom => {
                return Err(Error::InvalidEmbedding("custom embeddings are built with Embedding::custom".into()))
            }
            s => (s.tail_owner().unwrap(), s.q().unwrap()),
        };
        if q < -1 || q > q_max {
            return Err(Error::InvalidEmbedding(format!("q = {q} outside [-1, {q_max}] for a degree-{d} model")));
        }
        if owner < -1 || owner > q {
            return Err(Error::InvalidEmbedding(format!("tail owner {owner} must lie in [-1, q = {q}]")));
        }
        let mut series: Vec<Vec<Matrix>> = (-1..=q).map(|l| vec![padded(p, l)]).collect();
        if matches!(strategy, Strategy::Traditional) {
            // A_{-1}(z) = A_{-1} + sum_{i >= 1} A_i z^{i+1}, linear term left in A_0
            let tail = &mut series[0];
            if d >= 2 {
                tail.push(Matrix::zeros(m, m));
                for i in 1..d {
                    tail.push(padded(p, i));
                }
            }
        } else {
            // everything above degree q+1 goes to the owner: A_{owner, i - owner} = A_i
            let tail = &mut series[(owner + 1) as usize];
            for i in q + 1..d {
                let pos = (i - owner) as usize;
                while tail.len() < pos {
                    tail.push(Matrix::zeros(m, m));
                }
                tail.push(padded(p, i));
            }
        }
        Ok(Embedding { m, q, strategy, series })
    }

    /// Sparse construction from `(l, i, A_{l,i})` triples. Repeated `(l, i)` pairs add.
    pub fn custom(m: usize, q: isize, triples: Vec<(isize, usize, Matrix)>) -> Result<Self> {
        if q < -1 {
            return Err(Error::InvalidEmbedding(format!("q = {q} < -1")));
        }
        let mut series: Vec<Vec<Matrix>> = (-1..=q).map(|_| vec![Matrix::zeros(m, m)]).collect();
        for (l, i, a) in triples {
            if l < -1 || l > q {
                return Err(Error::InvalidEmbedding(format!("coefficient index {l} outside [-1, {q}]")));
            }
            if a.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!("A_{{{l},{i}}} is not {m}x{m}")));
            }
            let s = &mut series[(l + 1) as usize];
            while s.len() <= i {
                s.push(Matrix::zeros(m, m));
            }
            s[i] += &a;
        }
        Ok(Embedding { m, q, strategy: Strategy::Custom, series })
    }

    pub fn q(&self) -> isize {
        self.q
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Index of the coefficient holding a series, if exactly one does
    /// (for named strategies this is the strategy's owner).
    pub fn tail_owner(&self) -> Option<isize> {
        if let Some(o) = self.strategy.tail_owner() {
            return Some(o);
        }
        let mut owners = (-1..=self.q).filter(|&l| self.series_of(l).len() > 1);
        match (owners.next(), owners.next()) {
            (Some(l), None) => Some(l),
            _ => None,
        }
    }

    /// `[A_{l,0}, A_{l,1}, ...]`.
    pub fn series_of(&self, l: isize) -> &[Matrix] {
        &self.series[(l + 1) as usize]
    }

    /// `A_{l,i}`, zero when not stored.
    pub fn coefficient(&self, l: isize, i: usize) -> Option<&Matrix> {
        if l < -1 || l > self.q {
            return None;
        }
        self.series_of(l).get(i)
    }

    /// Constant parts `[A_{-1,0}, ..., A_{q-1,0}]`.
    pub fn const_coeffs(&self) -> Vec<&Matrix> {
        (-1..self.q).map(|l| &self.series_of(l)[0]).collect()
    }

    /// Series of the tail owner.
    pub fn tail_coeffs(&self) -> Option<&[Matrix]> {
        self.tail_owner().map(|l| self.series_of(l))
    }

    /// True when no `A_l(z)` depends on `z`, so the embedded equation does not
    /// depend on the current iterate.
    pub fn is_stationary(&self) -> bool {
        self.series.iter().all(|s| s.len() == 1)
    }

    /// `A_l(X)` by Horner over the stored series.
    pub fn eval_coefficient(&self, l: isize, x: &Matrix) -> Result<Matrix> {
        if l < -1 || l > self.q {
            return Err(Error::InvalidEmbedding(format!("coefficient index {l} outside [-1, {}]", self.q)));
        }
        if x.shape() != (self.m, self.m) {
            return Err(Error::DimensionMismatch(format!("argument is not {}x{}", self.m, self.m)));
        }
        Ok(horner(self.series_of(l), x))
    }

    /// `[A_{-1}(X), A_0(X), ..., A_q(X)]`.
    pub fn eval_all(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        (-1..=self.q).map(|l| self.eval_coefficient(l, x)).collect()
    }

    /// Checks nonnegativity and `A_i = A_{-1,i+1} + A_{0,i} + ... + A_{q,i-q}`.
    pub fn validate(&self, p: &MatrixPolynomial) -> Result<EmbeddingReport> {
        if p.block_size() != self.m {
            return Err(Error::DimensionMismatch("embedding and model block sizes differ".into()));
        }
        let min_entry = self.series.iter().flatten().map(Matrix::min_entry).fold(0.0f64, f64::min);
        let longest =
            self.series.iter().enumerate().map(|(k, s)| k as isize - 1 + s.len() as isize - 1).max().unwrap_or(-1);
        let last = longest.max(p.degree() as isize - 1);
        let mut max_violation = 0.0f64;
        let mut worst_jump = None;
        for i in -1..=last {
            let mut acc = Matrix::zeros(self.m, self.m);
            for l in -1..=self.q {
                if i - l >= 0 {
                    if let Some(c) = self.coefficient(l, (i - l) as usize) {
                        acc += c;
                    }
                }
            }
            let v = acc.max_abs_diff(&padded(p, i));
            if v > max_violation {
                max_violation = v;
                worst_jump = Some(i);
            }
        }
        Ok(EmbeddingReport { min_entry, max_violation, worst_jump })
    }

    /// Drops the highest stored term of the tail owner. Only used to build
    /// deliberately broken embeddings in tests.
    #[doc(hidden)]
    pub fn truncate_tail(&mut self) {
        if let Some(l) = self.tail_owner() {
            let s = &mut self.series[(l + 1) as usize];
            if s.len() > 1 {
                s.pop();
            } else {
                s[0].fill(0.0);
            }
        }
    }
}

/// Builds the embedding for `strategy` on `p`.
pub fn make_embedding(p: &MatrixPolynomial, strategy: Strategy) -> Result<Embedding> {
    Embedding::new(p, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(e: &Embedding, l: isize) -> Vec<f64> {
        e.series_of(l).iter().map(|a| a[(0, 0)]).collect()
    }

    #[test]
    fn parse_and_display() {
        for text in ["natural", "traditional", "ubased", "optimal:3", "mass:-1:1"] {
            let st: Strategy = text.parse().unwrap();
            assert_eq!(st.to_string(), text);
        }
        assert!("optimal".parse::<Strategy>().is_err());
        assert!("mass:0".parse::<Strategy>().is_err());
        assert!("cr".parse::<Strategy>().is_err());
    }

    #[test]
    fn optimal_without_tail() {
        let p = MatrixPolynomial::scalar(&[0.6, 0.1, 0.3]).unwrap();
        let e = Embedding::new(&p, Strategy::Optimal { q: 1 }).unwrap();
        assert_eq!(s(&e, -1), vec![0.6]);
        assert_eq!(s(&e, 0), vec![0.1]);
        assert_eq!(s(&e, 1), vec![0.3]);
        assert!(e.is_stationary());
    }

    #[test]
    fn optimal_with_tail() {
        let p = MatrixPolynomial::scalar(&[0.5, 0.2, 0.2, 0.1]).unwrap();
        let e = Embedding::new(&p, Strategy::Optimal { q: 1 }).unwrap();
        assert_eq!(s(&e, -1), vec![0.5]);
        assert_eq!(s(&e, 0), vec![0.2]);
        assert_eq!(s(&e, 1), vec![0.2, 0.1]);
        let v = e.eval_coefficient(1, &Matrix::scalar(0.5)).unwrap()[(0, 0)];
        assert!((v - 0.25).abs() < 1e-16);
        assert_eq!(e.eval_coefficient(0, &Matrix::scalar(0.9)).unwrap()[(0, 0)], 0.2);
        assert!(e.eval_coefficient(2, &Matrix::scalar(0.9)).is_err());
    }

    #[test]
    fn classical_shapes() {
        let p = MatrixPolynomial::scalar(&[0.5, 0.2, 0.2, 0.1]).unwrap();
        let u = Embedding::new(&p, Strategy::UBased).unwrap();
        assert_eq!(s(&u, -1), vec![0.5]);
        assert_eq!(s(&u, 0), vec![0.2, 0.2, 0.1]);
        assert_eq!(u.eval_coefficient(0, &Matrix::scalar(0.0)).unwrap()[(0, 0)], 0.2);

        let t = Embedding::new(&p, Strategy::Traditional).unwrap();
        assert_eq!(s(&t, -1), vec![0.5, 0.0, 0.2, 0.1]);
        assert_eq!(s(&t, 0), vec![0.2]);

        let n = Embedding::new(&p, Strategy::Natural).unwrap();
        assert_eq!(n.q(), -1);
        assert_eq!(s(&n, -1), vec![0.5, 0.2, 0.2, 0.1]);

        let three = MatrixPolynomial::scalar(&[0.6, 0.1, 0.3]).unwrap();
        let t3 = Embedding::new(&three, Strategy::Traditional).unwrap();
        assert_eq!(s(&t3, -1), vec![0.6, 0.0, 0.3]);
        assert_eq!(s(&t3, 0), vec![0.1]);
        assert!(t3.validate(&three).unwrap().passes(1e-15));
    }

    #[test]
    fn mass_owner_placements() {
        let p = MatrixPolynomial::scalar(&[0.4, 0.2, 0.2, 0.1, 0.1]).unwrap();
        let low = Embedding::new(&p, Strategy::Mass { owner: -1, q: 1 }).unwrap();
        assert_eq!(s(&low, -1), vec![0.4, 0.0, 0.0, 0.1, 0.1]);
        let mid = Embedding::new(&p, Strategy::Mass { owner: 0, q: 1 }).unwrap();
        assert_eq!(s(&mid, 0), vec![0.2, 0.0, 0.1, 0.1]);
        let top = Embedding::new(&p, Strategy::Mass { owner: 1, q: 1 }).unwrap();
        assert_eq!(top, {
            let mut o = Embedding::new(&p, Strategy::Optimal { q: 1 }).unwrap();
            o.strategy = Strategy::Mass { owner: 1, q: 1 };
            o
        });
        for e in [&low, &mid, &top] {
            assert!(e.validate(&p).unwrap().passes(1e-15));
        }
    }

    #[test]
    fn range_errors() {
        let p = MatrixPolynomial::scalar(&[0.6, 0.1, 0.3]).unwrap();
        assert!(Embedding::new(&p, Strategy::Optimal { q: 2 }).is_err());
        assert!(Embedding::new(&p, Strategy::Optimal { q: -2 }).is_err());
        assert!(Embedding::new(&p, Strategy::Mass { owner: 1, q: 0 }).is_err());
        assert!(Embedding::new(&p, Strategy::Custom).is_err());
    }

    #[test]
    fn truncated_tail_fails_at_last_jump() {
        let p = MatrixPolynomial::scalar(&[0.5, 0.2, 0.2, 0.1]).unwrap();
        let mut e = Embedding::new(&p, Strategy::Optimal { q: 1 }).unwrap();
        e.truncate_tail();
        let r = e.validate(&p).unwrap();
        assert!(!r.passes(1e-15));
        assert_eq!(r.worst_jump, Some(2));
    }

    #[test]
    fn custom_split() {
        let p = MatrixPolynomial::scalar(&[0.5, 0.2, 0.2, 0.1]).unwrap();
        let one = |x: f64| Matrix::scalar(x);
        // A_1 = 0.2 split between A_{0,1} and A_{1,0}; A_2 split three ways
        let e = Embedding::custom(
            1,
            1,
            vec![
                (-1, 0, one(0.5)),
                (0, 0, one(0.2)),
                (0, 1, one(0.05)),
                (1, 0, one(0.15)),
                (-1, 3, one(0.02)),
                (0, 2, one(0.03)),
                (1, 1, one(0.05)),
            ],
        )
        .unwrap();
        assert!(e.validate(&p).unwrap().passes(1e-15));
        assert_eq!(e.tail_owner(), None);
        assert!(!e.is_stationary());
    }
}
