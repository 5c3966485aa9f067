//! Entropy rate of the output process: Monte Carlo and exact enumeration.

use crate::belief::forward_step_into;
use crate::certificate::default_burn_in;
use crate::error::{Error, Result};
use crate::estimator::EstimatorResult;
use crate::linalg::Matrix;
use crate::model::{HiddenMarkovModel, ObservationMatrixSet, Output};
use crate::rng::SeedRecord;
use crate::simulate::Walk;

/// Largest `|Y|^n` accepted by [`entropy_rate_exact`].
pub const EXACT_LIMIT: u64 = 10_000_000;

/// Hands out `M(y)`, borrowing finite tables and filling a buffer for Gaussian outputs.
pub(crate) struct MatrixCursor {
    buf: Matrix,
}

impl MatrixCursor {
    pub fn new(n: usize) -> Self {
        MatrixCursor { buf: Matrix::zeros(n, n) }
    }

    #[inline]
    pub fn get<'a>(&'a mut self, obs: &'a ObservationMatrixSet, y: Output) -> &'a Matrix {
        match (obs, y) {
            (ObservationMatrixSet::Finite(ms), Output::Symbol(s)) => &ms[s],
            _ => {
                obs.fill(y, &mut self.buf);
                &self.buf
            }
        }
    }
}

/// Per-step terms `-ln ψ_t` after discarding `burn_in` steps of an `n`-step path.
pub fn entropy_rate_terms(model: &HiddenMarkovModel, n: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("path length must be positive".into()));
    }
    if n < 10 * burn_in {
        return Err(Error::PathTooShort { n, burn_in });
    }
    let mut rng = SeedRecord::new(seed).rng();
    let obs = model.observations();
    let mut cursor = MatrixCursor::new(model.num_states());
    let mut alpha = model.pi().to_vec();
    let mut next = vec![0.0; alpha.len()];
    let mut walk = Walk::start(model, &mut rng);
    let mut terms = Vec::with_capacity(n - burn_in);
    for t in 0..n {
        let y = walk.step(model, &mut rng);
        let psi = forward_step_into(&alpha, cursor.get(obs, y), &mut next)?;
        std::mem::swap(&mut alpha, &mut next);
        if t >= burn_in {
            terms.push(-psi.ln());
        }
    }
    Ok(terms)
}

/// `-(1/n) Σ ln ψ_t` along one simulated path, with the default burn-in.
pub fn entropy_rate_mc(model: &HiddenMarkovModel, n: usize, seed: u64) -> Result<EstimatorResult> {
    entropy_rate_mc_with(model, n, default_burn_in(model), seed)
}

pub fn entropy_rate_mc_with(model: &HiddenMarkovModel, n: usize, burn_in: usize, seed: u64) -> Result<EstimatorResult> {
    let terms = entropy_rate_terms(model, n, burn_in, seed)?;
    Ok(EstimatorResult::batch_means(&terms, SeedRecord::new(seed)))
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `H(Y_1^n) - H(Y_1^{n-1})` by enumerating every block of length `n`.
pub fn entropy_rate_exact(model: &HiddenMarkovModel, n: usize) -> Result<f64> {
    let ms = model.observations().matrices().ok_or(Error::RequiresFiniteAlphabet)?;
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    let size = ms.len();
    match (size as u64).checked_pow(n as u32) {
        Some(total) if total <= EXACT_LIMIT => {}
        _ => return Err(Error::AlphabetTooLarge { size, n }),
    }
    let q = model.num_states();
    // rows[d] holds π^T M(y_1)...M(y_d) for the current prefix.
    let mut rows = vec![vec![0.0; q]; n + 1];
    rows[0].copy_from_slice(model.pi());
    let (mut h_n, mut h_prev) = (0.0, 0.0);
    fn walk(ms: &[Matrix], rows: &mut [Vec<f64>], depth: usize, n: usize, h_n: &mut f64, h_prev: &mut f64) {
        for m in ms {
            let (head, tail) = rows.split_at_mut(depth + 1);
            m.vec_mul_into(&head[depth], &mut tail[0]);
            let p: f64 = tail[0].iter().sum();
            if p <= 0.0 {
                continue;
            }
            if depth + 1 == n {
                *h_n += plogp(p);
            } else {
                if depth + 2 == n {
                    *h_prev += plogp(p);
                }
                walk(ms, rows, depth + 1, n, h_n, h_prev);
            }
        }
    }
    walk(ms, &mut rows, 0, n, &mut h_n, &mut h_prev);
    Ok(h_n - h_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MarkovChain;
    use crate::model::bsc_kernels;

    fn bsc(p00: f64, p11: f64, eps: f64) -> HiddenMarkovModel {
        HiddenMarkovModel::finite(MarkovChain::two_state(p00, p11).unwrap(), &bsc_kernels(&[0, 1], eps)).unwrap()
    }

    fn binary_entropy(p: f64) -> f64 {
        plogp(p) + plogp(1.0 - p)
    }

    #[test]
    fn uniform_outputs_give_ln_alphabet() {
        let chain = MarkovChain::two_state(0.8, 0.3).unwrap();
        let h = vec![Matrix::from_fn(2, 2, |_, _| 1.0 / 3.0); 3];
        let model = HiddenMarkovModel::finite(chain, &h).unwrap();
        let r = entropy_rate_mc_with(&model, 10_000, 100, 1).unwrap();
        assert!((r.estimate - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn iid_states_give_single_letter_entropy() {
        let chain = MarkovChain::new(Matrix::from_rows(&[[0.8, 0.2], [0.8, 0.2]])).unwrap();
        let model = HiddenMarkovModel::finite(chain, &bsc_kernels(&[0, 1], 0.1)).unwrap();
        let target = binary_entropy(0.26);
        assert!((target - 0.57306).abs() < 1e-5);
        let r = entropy_rate_mc(&model, 200_000, 4).unwrap();
        assert!(r.agrees_with(target, 3.0, 0.0), "{r:?}");
        assert!((entropy_rate_exact(&model, 5).unwrap() - target).abs() < 1e-12);
    }

    #[test]
    fn first_order_is_single_letter() {
        let model = bsc(0.9, 0.5, 0.2);
        let p0 = model.output_probability(Output::Symbol(0));
        assert!((entropy_rate_exact(&model, 1).unwrap() - binary_entropy(p0)).abs() < 1e-15);
    }

    #[test]
    fn noiseless_chain_gives_chain_entropy() {
        let chain = MarkovChain::new(Matrix::from_rows(&[[0.7, 0.2, 0.1], [0.3, 0.3, 0.4], [0.5, 0.0, 0.5]])).unwrap();
        // A distinct symbol per edge.
        let h: Vec<Matrix> = (0..9).map(|e| Matrix::from_fn(3, 3, |i, j| if i * 3 + j == e { 1.0 } else { 0.0 })).collect();
        let model = HiddenMarkovModel::finite(chain.clone(), &h).unwrap();
        for n in 2..5 {
            assert!((entropy_rate_exact(&model, n).unwrap() - chain.entropy_rate()).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_noise_gives_ln2() {
        let model = bsc(0.9, 0.2, 0.5);
        for n in 1..8 {
            assert!((entropy_rate_exact(&model, n).unwrap() - 2f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_is_non_increasing() {
        let model = bsc(0.7, 0.7, 0.2);
        let hs: Vec<f64> = (1..=12).map(|n| entropy_rate_exact(&model, n).unwrap()).collect();
        assert!(hs.windows(2).all(|w| w[1] <= w[0] + 1e-13));
    }

    #[test]
    fn guards() {
        let model = bsc(0.7, 0.7, 0.2);
        assert!(matches!(entropy_rate_exact(&model, 30), Err(Error::AlphabetTooLarge { .. })));
        assert!(matches!(entropy_rate_mc_with(&model, 999, 100, 0), Err(Error::PathTooShort { .. })));
        assert!(matches!(entropy_rate_mc_with(&model, 0, 0, 0), Err(Error::InvalidArgument(_))));
    }
}
