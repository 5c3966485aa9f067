//! Finite-state Markov chains.

use crate::error::{Error, Result};
use crate::linalg::{l1_distance, Matrix};

pub const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-15;
const STATIONARY_MAX_ITER: usize = 1_000;

/// A row-stochastic transition matrix over an ordered state set.
///
/// Construction checks stochasticity and irreducibility. Aperiodicity is
/// checked by the operations that need it ([`stationary_distribution`] and
/// the primitivity certificate); closed-form high-noise coefficients only
/// need a unique stationary law, which irreducibility already gives.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    p: Matrix,
}

impl MarkovChain {
    pub fn new(p: Matrix) -> Result<Self> {
        if !p.is_square() || p.rows() == 0 {
            return Err(Error::model("P", format!("must be a non-empty square matrix, got {}x{}", p.rows(), p.cols())));
        }
        for i in 0..p.rows() {
            for (j, &x) in p.row(i).iter().enumerate() {
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::model(format!("P[{i}][{j}]"), format!("entry {x} is not a probability")));
                }
            }
            let s: f64 = p.row(i).iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::model(format!("P[{i}]"), format!("row sums to {s}, expected 1")));
            }
        }
        let chain = MarkovChain { p };
        if !chain.is_irreducible() {
            return Err(Error::model("P", "chain is not irreducible"));
        }
        Ok(chain)
    }

    /// Two-state chain with self-transition probabilities `p00`, `p11`.
    pub fn two_state(p00: f64, p11: f64) -> Result<Self> {
        Self::new(Matrix::from_rows(&[[p00, 1.0 - p00], [1.0 - p11, p11]]))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.p.rows()
    }

    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    /// Valid transitions `V = {(i, j) : p_ij > 0}` in row-major order.
    pub fn valid_edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_states();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.p[(i, j)] > 0.0).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        let n = self.num_states();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    let w = if forward { self.p[(u, v)] } else { self.p[(v, u)] };
                    if w > 0.0 && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Wielandt bound `(n-1)^2 + 1` on the primitivity index.
    pub fn wielandt_bound(&self) -> usize {
        let n = self.num_states();
        (n - 1) * (n - 1) + 1
    }

    /// Smallest `k <= k_max` with `P^k` entrywise positive.
    pub fn primitivity_index(&self, k_max: usize) -> Option<usize> {
        let n = self.num_states();
        let base: Vec<bool> = self.p.support();
        let mut cur = base.clone();
        for k in 1..=k_max {
            if cur.iter().all(|&b| b) {
                return Some(k);
            }
            let mut next = vec![false; n * n];
            for i in 0..n {
                for l in 0..n {
                    if !cur[i * n + l] {
                        continue;
                    }
                    for j in 0..n {
                        if base[l * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
            cur = next;
        }
        None
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity_index(self.wielandt_bound()).is_some()
    }

    /// Stationary law of an irreducible chain.
    ///
    /// Solves `π^T (P - I) = 0, Σπ = 1` directly, then polishes with power
    /// iteration on the lazy chain `(I + P)/2`, which shares the stationary
    /// law of `P` and is aperiodic even when `P` is not.
    pub fn stationary_law(&self) -> Vec<f64> {
        let n = self.num_states();
        let lazy = self.p.add(&Matrix::identity(n)).scale(0.5);
        let start = solve_stationary(&self.p).unwrap_or_else(|| vec![1.0 / n as f64; n]);
        power_iterate_left(&lazy, start, STATIONARY_TOL, STATIONARY_MAX_ITER)
    }

    /// Entropy rate `-Σ π(i) p_ij ln p_ij` of the chain itself, in nats.
    pub fn entropy_rate(&self) -> f64 {
        let pi = self.stationary_law();
        self.valid_edges()
            .into_iter()
            .map(|(i, j)| {
                let p = self.p[(i, j)];
                -pi[i] * p * p.ln()
            })
            .sum()
    }
}

/// Gaussian elimination with partial pivoting on `(P - I)^T π = 0` with the
/// last equation replaced by `Σπ = 1`.
fn solve_stationary(p: &Matrix) -> Option<Vec<f64>> {
    let n = p.rows();
    let mut a = Matrix::from_fn(n, n + 1, |r, c| {
        if r == n - 1 {
            1.0
        } else if c == n {
            0.0
        } else {
            p[(c, r)] - if r == c { 1.0 } else { 0.0 }
        }
    });
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[(x, col)].abs().total_cmp(&a[(y, col)].abs()))?;
        if a[(piv, col)].abs() < 1e-300 {
            return None;
        }
        for c in 0..=n {
            let t = a[(col, c)];
            a[(col, c)] = a[(piv, c)];
            a[(piv, c)] = t;
        }
        for r in 0..n {
            if r != col {
                let f = a[(r, col)] / a[(col, col)];
                if f != 0.0 {
                    for c in col..=n {
                        a[(r, c)] -= f * a[(col, c)];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|i| (a[(i, n)] / a[(i, i)]).max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    (s > 0.0 && s.is_finite()).then(|| pi.into_iter().map(|x| x / s).collect())
}

fn power_iterate_left(p: &Matrix, start: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = p.rows();
    let mut pi = start;
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        p.vec_mul_into(&pi, &mut next);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let diff = l1_distance(&next, &pi);
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            break;
        }
    }
    pi
}

/// Stationary distribution `π^T P = π^T` of a primitive chain.
pub fn stationary_distribution(chain: &MarkovChain) -> Result<Vec<f64>> {
    let bound = chain.wielandt_bound();
    if chain.primitivity_index(bound).is_none() {
        return Err(Error::NonPrimitiveChain { bound });
    }
    Ok(chain.stationary_law())
}
