//! Samplers for the forward and backward Blackwell (and Furstenberg) measures.

use rayon::prelude::*;

use crate::belief::{backward_step_into, forward_step_into};
use crate::entropy::MatrixCursor;
use crate::error::{Error, Result};
use crate::model::HiddenMarkovModel;
use crate::rng::stream_rng;
use crate::simulate::Walk;

/// Factorization tolerance below which beliefs are treated as fixed points.
const FIXED_POINT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn stream_offset(self) -> u64 {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }
}

/// A belief together with the true state at the same time index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackwellSample {
    pub belief: Vec<f64>,
    pub state: usize,
}

/// Draws `count` beliefs, each from its own independent path of `burn_in` steps.
///
/// Forward samples start from `α = π` and run the chain forward; backward
/// samples start from `β = 1` and run the time-reversed chain. Sample `s`
/// uses random stream `2s` (forward) or `2s + 1` (backward), so a forward
/// and a backward draw with the same seed are independent.
pub fn sample_blackwell(model: &HiddenMarkovModel, burn_in: usize, count: usize, seed: u64, direction: Direction) -> Result<Vec<BlackwellSample>> {
    if !model.chain().is_primitive() {
        return Err(Error::NotPrimitive("Blackwell measures need an aperiodic chain".into()));
    }
    let fixed = model.factorization(FIXED_POINT_TOL).is_some();
    (0..count as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, 2 * s + direction.stream_offset());
            if fixed {
                let state = model.sample_initial(&mut rng);
                let belief = match direction {
                    Direction::Forward => model.pi().to_vec(),
                    Direction::Backward => vec![1.0; model.num_states()],
                };
                return Ok(BlackwellSample { belief, state });
            }
            let obs = model.observations();
            let mut cursor = MatrixCursor::new(model.num_states());
            let mut walk = Walk::start(model, &mut rng);
            let mut next = vec![0.0; model.num_states()];
            let mut belief = match direction {
                Direction::Forward => model.pi().to_vec(),
                Direction::Backward => vec![1.0; model.num_states()],
            };
            for _ in 0..burn_in {
                match direction {
                    Direction::Forward => {
                        let y = walk.step(model, &mut rng);
                        forward_step_into(&belief, cursor.get(obs, y), &mut next)?;
                    }
                    Direction::Backward => {
                        let y = walk.step_back(model, &mut rng);
                        backward_step_into(&belief, cursor.get(obs, y), model.pi(), &mut next)?;
                    }
                }
                std::mem::swap(&mut belief, &mut next);
            }
            Ok(BlackwellSample { belief, state: walk.state })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::markov::MarkovChain;
    use crate::model::bsc_kernels;

    fn bsc(p00: f64, p11: f64, eps: f64) -> HiddenMarkovModel {
        HiddenMarkovModel::finite(MarkovChain::two_state(p00, p11).unwrap(), &bsc_kernels(&[0, 1], eps)).unwrap()
    }

    #[test]
    fn factorized_samples_are_exact() {
        let model = bsc(0.8, 0.3, 0.5);
        for s in sample_blackwell(&model, 50, 20, 1, Direction::Forward).unwrap() {
            assert_eq!(s.belief, model.pi());
        }
        for s in sample_blackwell(&model, 50, 20, 1, Direction::Backward).unwrap() {
            assert_eq!(s.belief, vec![1.0, 1.0]);
        }
    }

    #[test]
    fn means_match_pi_and_ones() {
        let model = bsc(0.8, 0.6, 0.2);
        let count = 20_000;
        let fw = sample_blackwell(&model, 200, count, 9, Direction::Forward).unwrap();
        let bw = sample_blackwell(&model, 200, count, 9, Direction::Backward).unwrap();
        for q in 0..2 {
            for (samples, target) in [(&fw, model.pi()[q]), (&bw, 1.0)] {
                let xs: Vec<f64> = samples.iter().map(|s| s.belief[q]).collect();
                let mean = xs.iter().sum::<f64>() / count as f64;
                let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt();
                assert!((mean - target).abs() < 3.5 * sd / (count as f64).sqrt(), "q={q} mean={mean} target={target}");
            }
        }
        assert!(bw.iter().all(|s| (dot(model.pi(), &s.belief) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn furstenberg_state_matches_belief() {
        // Pr(Q = 0 | α in bin) should equal the mean of α(0) over the bin.
        let model = bsc(0.9, 0.7, 0.15);
        let samples = sample_blackwell(&model, 200, 40_000, 3, Direction::Forward).unwrap();
        for bin in 0..4 {
            let lo = bin as f64 / 4.0;
            let inside: Vec<&BlackwellSample> = samples.iter().filter(|s| s.belief[0] >= lo && s.belief[0] < lo + 0.25).collect();
            if inside.len() < 500 {
                continue;
            }
            let k = inside.len() as f64;
            let freq = inside.iter().filter(|s| s.state == 0).count() as f64 / k;
            let mean = inside.iter().map(|s| s.belief[0]).sum::<f64>() / k;
            assert!((freq - mean).abs() < 4.0 * (mean * (1.0 - mean) / k).sqrt() + 1e-3, "bin {bin}: {freq} vs {mean}");
        }
    }

    #[test]
    fn periodic_chain_is_rejected() {
        let model = bsc(0.0, 0.0, 0.1);
        assert!(matches!(sample_blackwell(&model, 10, 1, 0, Direction::Forward), Err(Error::NotPrimitive(_))));
    }
}
