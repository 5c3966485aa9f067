//! Hidden Markov processes with observations attached to transitions.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::markov::MarkovChain;

pub const KERNEL_SUM_TOL: f64 = 1e-12;

/// One observation: a symbol index for finite alphabets, a real for Gaussian outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Output {
    Symbol(usize),
    Real(f64),
}

impl Output {
    pub fn symbol(self) -> usize {
        match self {
            Output::Symbol(y) => y,
            Output::Real(_) => panic!("expected a finite-alphabet symbol"),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Output::Symbol(y) => y as f64,
            Output::Real(y) => y,
        }
    }
}

#[inline]
pub fn normal_density(y: f64, mean: f64, variance: f64) -> f64 {
    let z = y - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// The matrices `M(y)` with `[M(y)]_ij = p_ij h_ij(y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationMatrixSet {
    /// One matrix per output symbol.
    Finite(Vec<Matrix>),
    /// `[M(y)]_ij = p_ij N(y; m_ij, variance)`.
    Gaussian { p: Matrix, means: Matrix, variance: f64 },
}

impl ObservationMatrixSet {
    pub fn is_finite(&self) -> bool {
        matches!(self, ObservationMatrixSet::Finite(_))
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            ObservationMatrixSet::Finite(ms) => Some(ms.len()),
            ObservationMatrixSet::Gaussian { .. } => None,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            ObservationMatrixSet::Finite(ms) => ms[0].rows(),
            ObservationMatrixSet::Gaussian { p, .. } => p.rows(),
        }
    }

    /// The finite table, if any.
    pub fn matrices(&self) -> Option<&[Matrix]> {
        match self {
            ObservationMatrixSet::Finite(ms) => Some(ms),
            ObservationMatrixSet::Gaussian { .. } => None,
        }
    }

    /// Writes `M(y)` into `out`.
    pub fn fill(&self, y: Output, out: &mut Matrix) {
        match (self, y) {
            (ObservationMatrixSet::Finite(ms), Output::Symbol(s)) => out.as_mut_slice().copy_from_slice(ms[s].as_slice()),
            (ObservationMatrixSet::Gaussian { p, means, variance }, Output::Real(v)) => {
                for ((o, &pij), &m) in out.as_mut_slice().iter_mut().zip(p.as_slice()).zip(means.as_slice()) {
                    *o = if pij > 0.0 { pij * normal_density(v, m, *variance) } else { 0.0 };
                }
            }
            _ => panic!("output kind does not match the alphabet"),
        }
    }

    pub fn matrix(&self, y: Output) -> Matrix {
        let n = self.num_states();
        let mut m = Matrix::zeros(n, n);
        self.fill(y, &mut m);
        m
    }
}

/// A hidden Markov process: a primitive or irreducible chain observed through
/// per-transition kernels.
#[derive(Debug, Clone)]
pub struct HiddenMarkovModel {
    chain: MarkovChain,
    pi: Vec<f64>,
    obs: ObservationMatrixSet,
    symbols: Vec<String>,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
struct Sampler {
    pi_cdf: Vec<f64>,
    row_cdf: Vec<f64>,
    // Finite alphabets: per-edge cumulative h_ij(.), laid out [(i*n + j)*|Y| + y].
    edge_cdf: Vec<f64>,
}

fn cumulative(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    xs.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Index of the first entry of a cumulative table exceeding `u`, skipping
/// zero-mass entries at the end.
#[inline]
pub(crate) fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    let total = cdf[cdf.len() - 1];
    let target = u * total;
    match cdf.iter().position(|&c| c > target) {
        Some(k) => k,
        None => {
            let mut k = cdf.len() - 1;
            while k > 0 && cdf[k - 1] == cdf[k] {
                k -= 1;
            }
            k
        }
    }
}

impl HiddenMarkovModel {
    /// Builds a finite-alphabet model from per-symbol kernels `h[y][(i, j)] = h_ij(y)`.
    pub fn finite(chain: MarkovChain, h: &[Matrix]) -> Result<Self> {
        let n = chain.num_states();
        if h.is_empty() {
            return Err(Error::model("alphabet", "must contain at least one symbol"));
        }
        for (y, hy) in h.iter().enumerate() {
            if hy.rows() != n || hy.cols() != n {
                return Err(Error::model(format!("h[{y}]"), format!("expected {n}x{n} kernel table")));
            }
        }
        let ms = h.iter().map(|hy| Matrix::from_fn(n, n, |i, j| if chain.prob(i, j) > 0.0 { chain.prob(i, j) * hy[(i, j)] } else { 0.0 })).collect();
        for (i, j) in chain.valid_edges() {
            let mut s = 0.0;
            for (y, hy) in h.iter().enumerate() {
                let v = hy[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::model(format!("h[{i}->{j}][{y}]"), format!("{v} is not a probability")));
                }
                s += v;
            }
            if (s - 1.0).abs() > KERNEL_SUM_TOL {
                return Err(Error::model(format!("h[{i}->{j}]"), format!("kernel sums to {s}, expected 1")));
            }
        }
        Self::assemble(chain, ObservationMatrixSet::Finite(ms))
    }

    /// Builds a finite-alphabet model directly from the matrices `M(y)`;
    /// `P` is recovered as `Σ_y M(y)`.
    pub fn from_matrices(ms: Vec<Matrix>) -> Result<Self> {
        if ms.is_empty() {
            return Err(Error::model("alphabet", "must contain at least one symbol"));
        }
        let n = ms[0].rows();
        for (y, m) in ms.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::model(format!("M[{y}]"), format!("expected {n}x{n} matrix")));
            }
            if let Some(k) = m.as_slice().iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::model(format!("M[{y}][{}][{}]", k / n, k % n), "entry is not a probability"));
            }
        }
        let mut p = Matrix::zeros(n, n);
        for m in &ms {
            p = p.add(m);
        }
        // Clean the last bits of rounding so the chain validates.
        for i in 0..n {
            let s: f64 = p.row(i).iter().sum();
            if (s - 1.0).abs() <= KERNEL_SUM_TOL {
                for j in 0..n {
                    p[(i, j)] /= s;
                }
            }
        }
        let chain = MarkovChain::new(p)?;
        Self::assemble(chain, ObservationMatrixSet::Finite(ms))
    }

    /// Gaussian outputs with per-edge means and a common variance.
    pub fn gaussian(chain: MarkovChain, means: Matrix, variance: f64) -> Result<Self> {
        let n = chain.num_states();
        if means.rows() != n || means.cols() != n {
            return Err(Error::model("alphabet.gaussian.means", format!("expected {n}x{n} means")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::model("alphabet.gaussian.variance", "must be positive and finite"));
        }
        for (i, j) in chain.valid_edges() {
            if !means[(i, j)].is_finite() {
                return Err(Error::model(format!("alphabet.gaussian.means[{i}][{j}]"), "mean must be finite"));
            }
        }
        let p = chain.matrix().clone();
        Self::assemble(chain, ObservationMatrixSet::Gaussian { p, means, variance })
    }

    fn assemble(chain: MarkovChain, obs: ObservationMatrixSet) -> Result<Self> {
        let n = chain.num_states();
        let pi = chain.stationary_law();
        let pi_cdf = cumulative(pi.iter().copied());
        let row_cdf = (0..n).flat_map(|i| cumulative(chain.matrix().row(i).iter().copied())).collect();
        let edge_cdf = match &obs {
            ObservationMatrixSet::Finite(ms) => {
                let mut cdf = Vec::with_capacity(n * n * ms.len());
                for i in 0..n {
                    for j in 0..n {
                        let p = chain.prob(i, j);
                        cdf.extend(cumulative(ms.iter().map(|m| if p > 0.0 { m[(i, j)] / p } else { 0.0 })));
                    }
                }
                cdf
            }
            ObservationMatrixSet::Gaussian { .. } => Vec::new(),
        };
        let symbols = match obs.alphabet_size() {
            Some(k) => (0..k).map(|y| y.to_string()).collect(),
            None => Vec::new(),
        };
        Ok(HiddenMarkovModel { chain, pi, obs, symbols, sampler: Sampler { pi_cdf, row_cdf, edge_cdf } })
    }

    /// Replaces the default symbol names `"0"`, `"1"`, ...
    pub fn with_symbols(mut self, symbols: Vec<String>) -> Result<Self> {
        if Some(symbols.len()) != self.obs.alphabet_size() {
            return Err(Error::model("alphabet", "symbol count does not match the kernels"));
        }
        self.symbols = symbols;
        Ok(self)
    }

    #[inline]
    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    /// Stationary law of the underlying chain.
    #[inline]
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    #[inline]
    pub fn observations(&self) -> &ObservationMatrixSet {
        &self.obs
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.chain.num_states()
    }

    pub fn alphabet_size(&self) -> Option<usize> {
        self.obs.alphabet_size()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn is_gaussian(&self) -> bool {
        !self.obs.is_finite()
    }

    /// `h_ij(y)` on a valid edge.
    pub fn emission(&self, i: usize, j: usize, y: Output) -> f64 {
        let p = self.chain.prob(i, j);
        if p == 0.0 {
            return 0.0;
        }
        match (&self.obs, y) {
            (ObservationMatrixSet::Finite(ms), Output::Symbol(s)) => ms[s][(i, j)] / p,
            (ObservationMatrixSet::Gaussian { means, variance, .. }, Output::Real(v)) => normal_density(v, means[(i, j)], *variance),
            _ => panic!("output kind does not match the alphabet"),
        }
    }

    /// First valid edge `(i, j, y)` with `h_ij(y) = 0`, if any.
    pub fn zero_emission(&self) -> Option<(usize, usize, usize)> {
        let ms = self.obs.matrices()?;
        for (i, j) in self.chain.valid_edges() {
            for (y, m) in ms.iter().enumerate() {
                if m[(i, j)] <= 0.0 {
                    return Some((i, j, y));
                }
            }
        }
        None
    }

    /// Law of a single output, `Pr(Y = y) = π^T M(y) 1` (a density for Gaussian outputs).
    pub fn output_probability(&self, y: Output) -> f64 {
        let n = self.num_states();
        match (&self.obs, y) {
            (ObservationMatrixSet::Finite(ms), Output::Symbol(s)) => (0..n).map(|i| self.pi[i] * ms[s].row(i).iter().sum::<f64>()).sum(),
            _ => {
                let m = self.obs.matrix(y);
                (0..n).map(|i| self.pi[i] * m.row(i).iter().sum::<f64>()).sum()
            }
        }
    }

    /// Edge occupancy `e_ij = π(i) p_ij`.
    pub fn edge_occupancy(&self) -> Matrix {
        let n = self.num_states();
        Matrix::from_fn(n, n, |i, j| self.pi[i] * self.chain.prob(i, j))
    }

    /// Scalar law `s` with `M(y) = s(y) P` when the model factorizes within `tol`.
    ///
    /// Gaussian models factorize when every valid edge has the same mean;
    /// the returned law is then that single mean.
    pub fn factorization(&self, tol: f64) -> Option<Vec<f64>> {
        let edges = self.chain.valid_edges();
        let (i0, j0) = edges[0];
        match &self.obs {
            ObservationMatrixSet::Finite(ms) => {
                let p0 = self.chain.prob(i0, j0);
                let s: Vec<f64> = ms.iter().map(|m| m[(i0, j0)] / p0).collect();
                let residual = factorization_residual(ms, self.chain.matrix(), &s);
                (residual <= tol).then_some(s)
            }
            ObservationMatrixSet::Gaussian { means, .. } => {
                let c = means[(i0, j0)];
                edges.iter().all(|&(i, j)| (means[(i, j)] - c).abs() <= tol).then(|| vec![c])
            }
        }
    }

    pub(crate) fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_cdf(&self.sampler.pi_cdf, rng.random())
    }

    pub(crate) fn sample_next<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let n = self.num_states();
        sample_cdf(&self.sampler.row_cdf[i * n..(i + 1) * n], rng.random())
    }

    pub(crate) fn sample_output<R: Rng + ?Sized>(&self, i: usize, j: usize, rng: &mut R) -> Output {
        match &self.obs {
            ObservationMatrixSet::Finite(ms) => {
                let k = ms.len();
                let base = (i * self.num_states() + j) * k;
                Output::Symbol(sample_cdf(&self.sampler.edge_cdf[base..base + k], rng.random()))
            }
            ObservationMatrixSet::Gaussian { means, variance, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                Output::Real(means[(i, j)] + variance.sqrt() * z)
            }
        }
    }

    /// One transition of the time-reversed chain: draws `q_{t-1}` given `q_t = j`
    /// from `p_ij π(i) / π(j)`.
    pub(crate) fn sample_previous<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> usize {
        let n = self.num_states();
        let u: f64 = rng.random();
        let target = u * self.pi[j];
        let mut acc = 0.0;
        let mut last = 0;
        for i in 0..n {
            let w = self.pi[i] * self.chain.prob(i, j);
            if w > 0.0 {
                acc += w;
                last = i;
                if acc > target {
                    return i;
                }
            }
        }
        last
    }

    /// Draws an output from the stationary single-output law.
    pub(crate) fn sample_stationary_output<R: Rng + ?Sized>(&self, rng: &mut R) -> Output {
        let i = self.sample_initial(rng);
        let j = self.sample_next(i, rng);
        self.sample_output(i, j, rng)
    }
}

/// `max_y ||M(y) - s(y) P||_∞` (entrywise).
pub fn factorization_residual(ms: &[Matrix], p: &Matrix, s: &[f64]) -> f64 {
    ms.iter()
        .zip(s)
        .map(|(m, &sy)| m.as_slice().iter().zip(p.as_slice()).fold(0.0f64, |acc, (&a, &b)| acc.max((a - sy * b).abs())))
        .fold(0.0, f64::max)
}

/// `π^T M(y_1) ... M(y_n) 1`; a density for Gaussian outputs.
pub fn block_probability(pi: &[f64], matrices: &ObservationMatrixSet, ys: &[Output]) -> f64 {
    let n = pi.len();
    let mut row = pi.to_vec();
    let mut next = vec![0.0; n];
    let mut m = Matrix::zeros(n, n);
    for &y in ys {
        matrices.fill(y, &mut m);
        m.vec_mul_into(&row, &mut next);
        std::mem::swap(&mut row, &mut next);
    }
    row.iter().sum()
}

/// Binary-symmetric observation of the destination state: `h_ij(y) = 1 - ε`
/// when `y` equals the label of `j`, else `ε`.
pub fn bsc_kernels(labels: &[usize], epsilon: f64) -> Vec<Matrix> {
    let n = labels.len();
    (0..2).map(|y| Matrix::from_fn(n, n, |_, j| if labels[j] == y { 1.0 - epsilon } else { epsilon })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_markov(p00: f64, p11: f64, eps: f64) -> HiddenMarkovModel {
        HiddenMarkovModel::finite(MarkovChain::two_state(p00, p11).unwrap(), &bsc_kernels(&[0, 1], eps)).unwrap()
    }

    #[test]
    fn matrices_sum_to_p() {
        let model = bsc_markov(0.9, 0.5, 0.2);
        let ms = model.observations().matrices().unwrap();
        let sum = ms[0].add(&ms[1]);
        assert!(sum.sub(model.chain().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn empty_block_has_probability_one() {
        let model = bsc_markov(0.9, 0.5, 0.2);
        assert_eq!(block_probability(model.pi(), model.observations(), &[]), 1.0);
    }

    #[test]
    fn factorized_block_is_a_product() {
        let model = bsc_markov(0.7, 0.2, 0.5);
        let s = model.factorization(1e-12).unwrap();
        let ys = [0, 1, 1, 0, 1].map(Output::Symbol);
        let p = block_probability(model.pi(), model.observations(), &ys);
        let expected: f64 = ys.iter().map(|y| s[y.symbol()]).product();
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn block_matches_path_enumeration() {
        let model = bsc_markov(0.9, 0.5, 0.1);
        let pi = model.pi();
        let p = model.chain().matrix();
        let ys = [0usize, 1, 0];
        let mut brute = 0.0;
        for code in 0..16usize {
            let q: Vec<usize> = (0..4).map(|t| (code >> t) & 1).collect();
            let mut w = pi[q[0]];
            for t in 0..3 {
                w *= p[(q[t], q[t + 1])] * model.emission(q[t], q[t + 1], Output::Symbol(ys[t]));
            }
            brute += w;
        }
        let fast = block_probability(pi, model.observations(), &ys.map(Output::Symbol));
        assert!((fast - brute).abs() < 1e-15);
    }

    #[test]
    fn kernel_errors_cite_the_edge() {
        let chain = MarkovChain::two_state(0.5, 0.5).unwrap();
        let mut h = bsc_kernels(&[0, 1], 0.1);
        h[0][(1, 0)] = 0.5;
        match HiddenMarkovModel::finite(chain, &h) {
            Err(Error::InvalidModel { path, .. }) => assert_eq!(path, "h[1->0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reversed_chain_sampling_matches_time_reversal() {
        use crate::rng::stream_rng;
        let model = bsc_markov(0.9, 0.5, 0.1);
        let mut rng = stream_rng(1, 0);
        let trials = 200_000;
        let hits = (0..trials).filter(|_| model.sample_previous(1, &mut rng) == 0).count();
        // Pr(Q_{t-1} = 0 | Q_t = 1) = p01 π(0) / π(1) = 0.1 * 5 = 0.5.
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }
}
