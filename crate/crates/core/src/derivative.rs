//! Derivatives of the entropy rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::backward_step_into;
use crate::blackwell::{sample_blackwell, BlackwellSample, Direction};
use crate::certificate::default_burn_in;
use crate::error::{Error, Result};
use crate::estimator::EstimatorResult;
use crate::family::{verify_pi_constant, MatrixDerivatives, ParametrizedFamily};
use crate::linalg::{dot, power_iteration, Matrix};
use crate::markov::MarkovChain;
use crate::model::{HiddenMarkovModel, Output};
use crate::rng::{stream_rng, SeedRecord};
use crate::simulate::simulate_path;

const SPECTRAL_GAP_TOL: f64 = 1e-8;
/// Streams for auxiliary output draws sit far above the belief streams.
const OUTPUT_STREAM_BASE: u64 = 1 << 62;

/// Derivative of `ln ρ(M + θ M')` at `θ = 0`: `a^T M' b / (a^T M b)` with
/// `a`, `b` the dominant left and right eigenvectors of `M`.
pub fn lsr_derivative(m: &Matrix, mprime: &Matrix) -> Result<f64> {
    if !m.is_square() || m.rows() != mprime.rows() || m.cols() != mprime.cols() {
        return Err(Error::DimensionMismatch("M and M' must be square and of equal size".into()));
    }
    if m.as_slice().iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument("M must be nonnegative".into()));
    }
    let (rho, b, _) = power_iteration(m, 1e-15, 100_000);
    let (_, a, _) = power_iteration(&m.transpose(), 1e-15, 100_000);
    if !(rho > 0.0) {
        return Err(Error::DegenerateSpectrum { gap: 0.0 });
    }
    let gap = 1.0 - subdominant_modulus(m, rho, &a, &b) / rho;
    if gap < SPECTRAL_GAP_TOL {
        return Err(Error::DegenerateSpectrum { gap });
    }
    Ok(mprime.bilinear(&a, &b) / m.bilinear(&a, &b))
}

/// Growth rate of `M - ρ b a^T / (a^T b)`, which removes the dominant pair.
fn subdominant_modulus(m: &Matrix, rho: f64, a: &[f64], b: &[f64]) -> f64 {
    let n = m.rows();
    let ab = dot(a, b);
    let deflated = Matrix::from_fn(n, n, |i, j| m[(i, j)] - rho * b[i] * a[j] / ab);
    // Irrational offsets keep the start vector off any invariant subspace.
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5).collect();
    let mut log_growth = 0.0;
    let (warmup, measured) = (200, 200);
    for it in 0..warmup + measured {
        let y = deflated.mul_vec(&x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 * rho.max(1.0) {
            return 0.0;
        }
        if it >= warmup {
            log_growth += (norm / x.iter().map(|v| v * v).sum::<f64>().sqrt()).ln();
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    (log_growth / measured as f64).exp()
}

/// Forward and backward Blackwell samples for the same seed.
fn belief_samples(model: &HiddenMarkovModel, samples: usize, burn_in: usize, seed: u64) -> Result<(Vec<BlackwellSample>, Vec<BlackwellSample>)> {
    let alphas = sample_blackwell(model, burn_in, samples, seed, Direction::Forward)?;
    let betas = sample_blackwell(model, burn_in, samples, seed, Direction::Backward)?;
    Ok((alphas, betas))
}

fn require_primitive(model: &HiddenMarkovModel) -> Result<()> {
    if model.chain().is_primitive() {
        Ok(())
    } else {
        Err(Error::NotPrimitive("chain is periodic".into()))
    }
}

/// Monte Carlo estimate of `dH/dθ = -E_{α,β}[Σ_y α^T M'(y) β ln(α^T M(y) β)]`
/// with α and β from independent forward and backward Blackwell draws.
///
/// For Gaussian outputs the sum over `y` becomes an expectation over an
/// independent draw from the stationary output law, weighted by its density.
pub fn entropy_derivative_mc<F: ParametrizedFamily + ?Sized>(
    family: &F,
    theta: f64,
    samples: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<EstimatorResult> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    verify_pi_constant(family)?;
    let model = family.model_at(theta)?;
    require_primitive(&model)?;
    let derivs = family.derivatives(theta)?;
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(&model));
    let (alphas, betas) = belief_samples(&model, samples, burn_in, seed)?;
    let n = model.num_states();
    let obs = model.observations();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let (alpha, beta) = (&alphas[s].belief, &betas[s].belief);
            let mut m = Matrix::zeros(n, n);
            let mut d1 = Matrix::zeros(n, n);
            let mut d2 = Matrix::zeros(n, n);
            let mut term = |y: Output, m: &mut Matrix| {
                obs.fill(y, m);
                derivs.fill(y, &mut d1, &mut d2);
                let lik = m.bilinear(alpha, beta);
                if lik > 0.0 {
                    -d1.bilinear(alpha, beta) * lik.ln()
                } else {
                    0.0
                }
            };
            match model.alphabet_size() {
                Some(k) => (0..k).map(|y| term(Output::Symbol(y), &mut m)).sum(),
                None => {
                    let mut rng = stream_rng(seed, OUTPUT_STREAM_BASE + s as u64);
                    let y = model.sample_stationary_output(&mut rng);
                    term(y, &mut m) / model.output_probability(y)
                }
            }
        })
        .collect();
    Ok(EstimatorResult::iid(&values, SeedRecord::new(seed)))
}

/// Monte Carlo residual of one expectation identity of the Blackwell measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    /// Sample mean of `(quantity - target)`, per component.
    pub residual: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl IdentityResidual {
    fn from_rows(name: &'static str, rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let (mut residual, mut std_error) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
        for c in 0..dim {
            let column: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let r = EstimatorResult::iid(&column, SeedRecord::new(0));
            residual.push(r.estimate);
            std_error.push(r.std_error);
        }
        IdentityResidual { name, residual, std_error }
    }

    /// Every component within `k` standard errors of zero.
    pub fn holds(&self, k: f64) -> bool {
        self.residual.iter().zip(&self.std_error).all(|(r, s)| r.abs() <= k * s + 1e-13)
    }

    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub samples: usize,
    pub identities: Vec<IdentityResidual>,
}

impl PropertyReport {
    pub fn holds(&self, k: f64) -> bool {
        self.identities.iter().all(|r| r.holds(k))
    }
}

/// Residuals of the five Blackwell-measure identities:
/// `E[α] = π`, `E[β] = 1`, `E_α[α^T P β] = 1`, `E_β[α^T P β] = 1`, and
/// `E[α^T (Σ_y M'(y)) β] = 0` (the last only when derivatives are supplied).
///
/// Each residual is a mean of per-sample differences from the value the
/// identity predicts for that sample, so models at a factorized point
/// (where beliefs are constant) give exactly zero.
pub fn measure_property_check(
    model: &HiddenMarkovModel,
    derivatives: Option<&MatrixDerivatives>,
    samples: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<PropertyReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    require_primitive(model)?;
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(model));
    let (alphas, betas) = belief_samples(model, samples, burn_in, seed)?;
    let pi = model.pi();
    let ones = vec![1.0; pi.len()];
    let p = model.chain().matrix();
    let pprime = derivatives.map(MatrixDerivatives::first_total);
    let mut rows: [Vec<Vec<f64>>; 5] = Default::default();
    for (a, b) in alphas.iter().zip(&betas) {
        let (alpha, beta) = (&a.belief, &b.belief);
        rows[0].push(alpha.iter().zip(pi).map(|(x, y)| x - y).collect());
        rows[1].push(beta.iter().map(|x| x - 1.0).collect());
        let apb = p.bilinear(alpha, beta);
        rows[2].push(vec![apb - p.bilinear(pi, beta)]);
        rows[3].push(vec![apb - p.bilinear(alpha, &ones)]);
        if let Some(d) = &pprime {
            rows[4].push(vec![d.bilinear(alpha, beta) - d.bilinear(pi, &ones)]);
        }
    }
    let names =
        ["forward mean is pi", "backward mean is one", "forward average of a^T P b", "backward average of a^T P b", "derivative mass is zero"];
    let identities = names.iter().zip(&rows).filter(|(_, r)| !r.is_empty()).map(|(name, r)| IdentityResidual::from_rows(name, r)).collect();
    Ok(PropertyReport { samples, identities })
}

/// A feasible direction `Δ_ij` for the edge occupancy `e_ij = π(i) p_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePerturbation {
    delta: Matrix,
}

impl EdgePerturbation {
    /// Checks `Σ Δ = 0`, `Δ = 0` off the valid edges, and per-state flow balance.
    pub fn new(chain: &MarkovChain, delta: Matrix) -> Result<Self> {
        let n = chain.num_states();
        if delta.rows() != n || delta.cols() != n {
            return Err(Error::InvalidPerturbation(format!("expected a {n}x{n} matrix")));
        }
        let scale = delta.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                if chain.prob(i, j) == 0.0 && delta[(i, j)] != 0.0 {
                    return Err(Error::InvalidPerturbation(format!("edge {i}->{j} is not a valid transition")));
                }
            }
            let out: f64 = delta.row(i).iter().sum();
            let inflow: f64 = (0..n).map(|k| delta[(k, i)]).sum();
            if (out - inflow).abs() > 1e-12 * scale {
                return Err(Error::InvalidPerturbation(format!("flow into state {i} is unbalanced by {}", out - inflow)));
            }
        }
        let total: f64 = delta.as_slice().iter().sum();
        if total.abs() > 1e-12 * scale {
            return Err(Error::InvalidPerturbation(format!("entries sum to {total}, expected 0")));
        }
        Ok(EdgePerturbation { delta })
    }

    pub fn delta(&self) -> &Matrix {
        &self.delta
    }

    /// The chain with edge occupancy `e + t Δ`.
    pub fn perturbed_chain(&self, model: &HiddenMarkovModel, t: f64) -> Result<MarkovChain> {
        let e = model.edge_occupancy().add(&self.delta.scale(t));
        let n = e.rows();
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            let s: f64 = e.row(i).iter().sum();
            for j in 0..n {
                p[(i, j)] = e[(i, j)] / s;
            }
        }
        MarkovChain::new(p)
    }
}

/// Lags summed by default in the score covariance: enough for `|λ_2(P)|^L < 1e-6`, within `[20, 2000]`.
fn default_window(model: &HiddenMarkovModel) -> usize {
    let lambda = subdominant_modulus(model.chain().matrix(), 1.0, model.pi(), &vec![1.0; model.num_states()]);
    if lambda <= 0.0 || lambda >= 1.0 {
        return if lambda >= 1.0 { 2000 } else { 20 };
    }
    ((1e-6f64.ln() / lambda.ln()).ceil() as usize).clamp(20, 2000)
}

/// Monte Carlo estimate of `dH/dt` when the edge occupancy moves along `Δ`
/// and the observation kernels `h_ij` stay fixed.
///
/// Splits `H(Y) = H(Q, Y) - H(Q | Y)`. The first part has the closed-form
/// derivative `-Σ Δ_ij Σ_y h_ij(y) ln M_ij(y)`. The second is
/// `-E[ln Pr(Q_{t+1} | Q_t, Y)]`, whose derivative is the covariance of that
/// log-posterior with the path score `s_u = Δ_ij / e_ij - Δπ_i / π_i`, summed
/// over lags `|u - t| <= window`. One path of `samples` transitions is
/// simulated; the posterior only needs the backward belief `β_{t+1}`.
pub fn edge_occupancy_entropy_derivative(
    model: &HiddenMarkovModel,
    perturbation: &EdgePerturbation,
    samples: usize,
    window: Option<usize>,
    seed: u64,
) -> Result<EstimatorResult> {
    let ms = model.observations().matrices().ok_or(Error::RequiresFiniteAlphabet)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let record = SeedRecord::new(seed);
    let delta = perturbation.delta();
    if delta.as_slice().iter().all(|&d| d == 0.0) {
        return Ok(EstimatorResult::iid(&vec![0.0; samples], record));
    }
    require_primitive(model)?;
    let pi = model.pi();
    let e = model.edge_occupancy();
    let mut fixed = 0.0;
    for (i, j) in model.chain().valid_edges() {
        for m in ms {
            let mij = m[(i, j)];
            if mij > 0.0 && delta[(i, j)] != 0.0 {
                fixed -= delta[(i, j)] * (mij / model.chain().prob(i, j)) * mij.ln();
            }
        }
    }
    let window = window.unwrap_or_else(|| default_window(model));
    // Margins let both the lag window and the backward belief settle.
    let margin = 2 * window + 10;
    let n = samples + 2 * margin;
    let path = simulate_path(model, n, seed);
    let q = &path.states;
    let flow: Vec<f64> = (0..pi.len()).map(|i| delta.row(i).iter().sum::<f64>() / pi[i]).collect();
    let mut score_prefix = vec![0.0; n + 1];
    for u in 0..n {
        let (i, j) = (q[u], q[u + 1]);
        score_prefix[u + 1] = score_prefix[u] + delta[(i, j)] / e[(i, j)] - flow[i];
    }
    let mut log_post = vec![0.0; n];
    let mut beta = vec![1.0; pi.len()];
    let mut next = beta.clone();
    for t in (0..n).rev() {
        let m = &ms[path.outputs[t].symbol()];
        let (i, j) = (q[t], q[t + 1]);
        log_post[t] = (m[(i, j)] * beta[j] / dot(m.row(i), &beta)).ln();
        backward_step_into(&beta, m, pi, &mut next)?;
        std::mem::swap(&mut beta, &mut next);
    }
    let kept = margin..n - margin;
    let mean_post = log_post[kept.clone()].iter().sum::<f64>() / samples as f64;
    let values: Vec<f64> = kept.map(|t| fixed + (log_post[t] - mean_post) * (score_prefix[t + window + 1] - score_prefix[t - window])).collect();
    Ok(EstimatorResult::batch_means(&values, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy_rate_exact;
    use crate::family::PolynomialFamily;
    use crate::model::bsc_kernels;

    #[test]
    fn lsr_examples() {
        let d = lsr_derivative(&Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]), &Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]])).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        let d = lsr_derivative(&Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]), &Matrix::identity(2)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!(matches!(lsr_derivative(&Matrix::identity(2), &Matrix::identity(2)), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn factorized_point_has_zero_variance() {
        let fam = PolynomialFamily::bsc(MarkovChain::two_state(0.9, 0.5).unwrap(), &[0, 1]).unwrap();
        let r = entropy_derivative_mc(&fam, 0.0, 200, Some(10), 1).unwrap();
        assert_eq!(r.std_error, 0.0);
        // c1 = -Σ_y π^T M'(y) 1 ln s(y) with s = 1/2 and Σ_y M'(y) 1 = 0.
        assert!(r.estimate.abs() < 1e-15);
    }

    #[test]
    fn factorized_residuals_are_exactly_zero() {
        let fam = PolynomialFamily::bsc(MarkovChain::two_state(0.7, 0.2).unwrap(), &[0, 1]).unwrap();
        let model = fam.model_at(0.0).unwrap();
        let d = fam.derivatives(0.0).unwrap();
        let report = measure_property_check(&model, Some(&d), 100, Some(20), 4).unwrap();
        assert_eq!(report.identities.len(), 5);
        for id in &report.identities {
            assert!(id.residual.iter().all(|&r| r == 0.0), "{id:?}");
        }
    }

    #[test]
    fn perturbation_validation() {
        let chain = MarkovChain::two_state(0.5, 0.0).unwrap();
        let bad = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.1]]);
        assert!(matches!(EdgePerturbation::new(&chain, bad), Err(Error::InvalidPerturbation(_))));
        let unbalanced = Matrix::from_rows(&[[0.1, -0.1], [0.0, 0.0]]);
        assert!(EdgePerturbation::new(&chain, unbalanced).is_err());
        let ok = Matrix::from_rows(&[[0.2, -0.1], [-0.1, 0.0]]);
        assert!(EdgePerturbation::new(&chain, ok).is_ok());
    }

    #[test]
    fn zero_perturbation_is_exactly_zero() {
        let chain = MarkovChain::two_state(0.6, 0.3).unwrap();
        let model = HiddenMarkovModel::finite(chain.clone(), &bsc_kernels(&[0, 1], 0.2)).unwrap();
        let pert = EdgePerturbation::new(&chain, Matrix::zeros(2, 2)).unwrap();
        let r = edge_occupancy_entropy_derivative(&model, &pert, 50, None, 0).unwrap();
        assert_eq!((r.estimate, r.std_error), (0.0, 0.0));
    }

    fn exact_edge_derivative(model: &HiddenMarkovModel, pert: &EdgePerturbation, kernels: &[Matrix], n: usize) -> f64 {
        let h = 1e-3;
        let at = |t: f64| entropy_rate_exact(&HiddenMarkovModel::finite(pert.perturbed_chain(model, t).unwrap(), kernels).unwrap(), n).unwrap();
        (at(h) - at(-h)) / (2.0 * h)
    }

    #[test]
    fn edge_derivative_matches_finite_difference() {
        let chain = MarkovChain::two_state(0.7, 0.4).unwrap();
        let kernels = bsc_kernels(&[0, 1], 0.15);
        let model = HiddenMarkovModel::finite(chain.clone(), &kernels).unwrap();
        let pert = EdgePerturbation::new(&chain, Matrix::from_rows(&[[0.05, -0.02], [-0.02, -0.01]])).unwrap();
        let oracle = exact_edge_derivative(&model, &pert, &kernels, 12);
        assert!((oracle - exact_edge_derivative(&model, &pert, &kernels, 14)).abs() < 1e-8);
        let r = edge_occupancy_entropy_derivative(&model, &pert, 400_000, None, 5).unwrap();
        assert!(r.agrees_with(oracle, 3.0, 1e-3), "{r:?} vs {oracle}");
    }

    #[test]
    fn edge_derivative_with_state_blind_outputs() {
        // Outputs carry no information, so dH = 0.
        let chain = MarkovChain::new(Matrix::from_rows(&[[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])).unwrap();
        let kernels = vec![Matrix::from_fn(3, 3, |_, _| 0.25), Matrix::from_fn(3, 3, |_, _| 0.75)];
        let model = HiddenMarkovModel::finite(chain.clone(), &kernels).unwrap();
        let delta = Matrix::from_rows(&[[-0.02, 0.02, 0.0], [0.02, -0.02, 0.01], [0.0, 0.01, -0.02]]);
        let pert = EdgePerturbation::new(&chain, delta).unwrap();
        let oracle = exact_edge_derivative(&model, &pert, &kernels, 8);
        assert!(oracle.abs() < 1e-9);
        let r = edge_occupancy_entropy_derivative(&model, &pert, 100_000, None, 2).unwrap();
        assert!(r.agrees_with(0.0, 3.0, 0.0), "{r:?}");
    }
}
