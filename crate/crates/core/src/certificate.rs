//! (ε, k)-primitivity certificates and the forgetting bound they imply.

use rand::Rng;

use crate::contraction::birkhoff_coefficients;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::HiddenMarkovModel;
use crate::rng::stream_rng;

/// Exact enumeration over `Y^k` is attempted only below this many sequences.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;
const SAMPLED_SEQUENCES: usize = 100_000;
const TAU_CHECKS: usize = 1_000;
const CERTIFICATE_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitivityCertificate {
    pub k: usize,
    /// Every k-step product has all entries `>= k ε`.
    pub epsilon: f64,
    /// Contraction rate `e^{-2ε}` per step.
    pub gamma: f64,
    /// Mixing constant `-2 ln(kε) γ^{-k}`.
    pub c: f64,
    /// False when `ε` comes from sampled rather than exhaustively enumerated sequences.
    pub certified: bool,
    /// Largest `τ(M(y^k)) / e^{-2kε}` seen over the checked sequences (must be ≤ 1).
    pub tau_ratio: f64,
}

impl PrimitivityCertificate {
    /// Upper bound on the Hilbert distance between two forward beliefs after
    /// `n ≥ k` common observations, whatever the starting beliefs.
    pub fn forgetting_bound(&self, n: usize) -> f64 {
        self.c * self.gamma.powi(n as i32 - self.k as i32)
    }

    /// Default burn-in `50 k / ε`.
    pub fn burn_in(&self) -> usize {
        (50.0 * self.k as f64 / self.epsilon).ceil() as usize
    }
}

fn product_of(ms: &[Matrix], seq: &[usize]) -> Matrix {
    seq[1..].iter().fold(ms[seq[0]].clone(), |acc, &y| acc.matmul(&ms[y]))
}

/// Smallest `k ≤ k_max` with `P^k > 0` and the matching `ε`.
pub fn primitivity_certificate(model: &HiddenMarkovModel, k_max: usize) -> Result<PrimitivityCertificate> {
    let ms = match model.observations().matrices() {
        Some(ms) => ms,
        None => return Err(Error::NotApplicable("certificates need bounded likelihood ratios; Gaussian outputs have none".into())),
    };
    if let Some((from, to, symbol)) = model.zero_emission() {
        return Err(Error::ZeroObservationProbability { from, to, symbol });
    }
    let k = model.chain().primitivity_index(k_max).ok_or(Error::NotPrimitiveWithin(k_max))?;
    let ny = ms.len();
    let total = (ny as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    let (min_entry, certified) = if total <= ENUMERATION_LIMIT {
        (enumerate_min(ms, k), true)
    } else {
        let mut rng = stream_rng(CERTIFICATE_SEED, 0);
        let mut best = f64::INFINITY;
        let mut seq = vec![0; k];
        for _ in 0..SAMPLED_SEQUENCES {
            seq.iter_mut().for_each(|y| *y = rng.random_range(0..ny));
            best = best.min(product_of(ms, &seq).min_entry());
        }
        (best, false)
    };
    let epsilon = min_entry / k as f64;
    let gamma = (-2.0 * epsilon).exp();
    let c = -2.0 * (k as f64 * epsilon).ln() * gamma.powi(-(k as i32));

    let mut rng = stream_rng(CERTIFICATE_SEED, 1);
    let mut tau_ratio: f64 = 0.0;
    let bound = (-2.0 * k as f64 * epsilon).exp();
    let mut seq = vec![0; k];
    let checks = if total <= TAU_CHECKS as u64 { total as usize } else { TAU_CHECKS };
    for t in 0..checks {
        if total <= TAU_CHECKS as u64 {
            let mut code = t;
            for y in seq.iter_mut() {
                *y = code % ny;
                code /= ny;
            }
        } else {
            seq.iter_mut().for_each(|y| *y = rng.random_range(0..ny));
        }
        let tau = birkhoff_coefficients(&product_of(ms, &seq))?.tau;
        tau_ratio = tau_ratio.max(tau / bound);
    }
    Ok(PrimitivityCertificate { k, epsilon, gamma, c, certified, tau_ratio })
}

/// Minimum entry over all products `M(y_1) ... M(y_k)`, by depth-first enumeration.
fn enumerate_min(ms: &[Matrix], k: usize) -> f64 {
    fn go(ms: &[Matrix], acc: &Matrix, depth: usize, best: &mut f64) {
        if depth == 0 {
            *best = best.min(acc.min_entry());
            return;
        }
        for m in ms {
            go(ms, &acc.matmul(m), depth - 1, best);
        }
    }
    let mut best = f64::INFINITY;
    for m in ms {
        go(ms, m, k - 1, &mut best);
    }
    best
}

/// Burn-in from the certificate when one exists, else 1000 steps.
pub fn default_burn_in(model: &HiddenMarkovModel) -> usize {
    primitivity_certificate(model, model.chain().wielandt_bound()).map(|c| c.burn_in()).unwrap_or(1000)
}
