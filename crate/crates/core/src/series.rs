//! High-noise expansions `H(θ) ≈ c0 + c1 (θ − θ*) + c2 (θ − θ*)² / 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{check_domain, verify_pi_constant, MatrixDerivatives, ParametrizedFamily};
use crate::linalg::Matrix;
use crate::markov::MarkovChain;
use crate::model::{factorization_residual, normal_density, HiddenMarkovModel, ObservationMatrixSet, Output};
use crate::quadrature::{GaussHermite, DEFAULT_ORDER};

/// Largest factorization residual accepted at a high-noise point.
pub const FACTORIZATION_TOL: f64 = 1e-10;

/// Output law `s(y)` at a point where `M(y) = s(y) P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScalarLaw {
    Finite(Vec<f64>),
    Gaussian { mean: f64, variance: f64 },
}

impl ScalarLaw {
    /// Probability (finite) or density (Gaussian) of `y`.
    pub fn at(&self, y: Output) -> f64 {
        match self {
            ScalarLaw::Finite(s) => s[y.symbol()],
            ScalarLaw::Gaussian { mean, variance } => normal_density(y.value(), *mean, *variance),
        }
    }

    /// Shannon entropy, or differential entropy for the Gaussian law.
    pub fn entropy(&self) -> f64 {
        match self {
            ScalarLaw::Finite(s) => s.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum(),
            ScalarLaw::Gaussian { variance, .. } => 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HighNoisePoint {
    pub theta_star: f64,
    pub scalar_law: ScalarLaw,
    pub chain: MarkovChain,
    /// `max_y ‖M(y) − s(y) P‖_∞`; for Gaussian outputs a bound over all real `y`.
    pub residual: f64,
}

/// Entropy of one output symbol and its first two parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleLetter {
    pub entropy: f64,
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesExpansion {
    pub theta_star: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SeriesExpansion {
    /// Quadratic predictor; its error is third order in `θ − θ*`.
    pub fn predict(&self, theta: f64) -> f64 {
        let d = theta - self.theta_star;
        self.c0 + self.c1 * d + 0.5 * self.c2 * d * d
    }
}

/// Checks that `M_θ*(y) = s(y) P` and extracts `s`.
///
/// For finite outputs `s(y) = π^T M(y) 1` and every valid edge is compared
/// against it. For Gaussian outputs all valid-edge means must coincide.
pub fn detect_high_noise_point<F: ParametrizedFamily + ?Sized>(family: &F, theta_star: f64) -> Result<HighNoisePoint> {
    check_domain(family, theta_star)?;
    let model = family.model_at(theta_star)?;
    let chain = model.chain().clone();
    let (scalar_law, residual) = match model.observations() {
        ObservationMatrixSet::Finite(ms) => {
            let s: Vec<f64> = (0..ms.len()).map(|y| model.output_probability(Output::Symbol(y))).collect();
            let residual = factorization_residual(ms, chain.matrix(), &s);
            (ScalarLaw::Finite(s), residual)
        }
        ObservationMatrixSet::Gaussian { means, variance, .. } => {
            let edges = chain.valid_edges();
            let e = model.edge_occupancy();
            let mean: f64 = edges.iter().map(|&(i, j)| e[(i, j)] * means[(i, j)]).sum();
            // sup_y |φ(y; m) − φ(y; c)| <= |m − c| sup|φ'| = |m − c| / (σ² √(2π e)).
            let slope = 1.0 / (variance * (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt());
            let residual = edges.iter().map(|&(i, j)| chain.prob(i, j) * (means[(i, j)] - mean).abs() * slope).fold(0.0, f64::max);
            (ScalarLaw::Gaussian { mean, variance: *variance }, residual)
        }
    };
    if residual > FACTORIZATION_TOL {
        return Err(Error::NotFactorized { theta: theta_star, residual });
    }
    Ok(HighNoisePoint { theta_star, scalar_law, chain, residual })
}

/// `π^T A 1`.
fn pi_total(pi: &[f64], a: &Matrix) -> f64 {
    pi.iter().enumerate().map(|(i, &w)| w * a.row(i).iter().sum::<f64>()).sum()
}

/// Sums `g(p(y), p'(y), p''(y))` over a finite alphabet, with `p^(k)(y) = π^T M^(k)(y) 1`.
fn finite_sum<G: Fn(f64, f64, f64) -> f64>(model: &HiddenMarkovModel, derivs: &MatrixDerivatives, g: G) -> f64 {
    let n = model.num_states();
    let (mut d1, mut d2) = (Matrix::zeros(n, n), Matrix::zeros(n, n));
    let ms = model.observations().matrices().expect("finite alphabet");
    ms.iter()
        .enumerate()
        .map(|(y, m)| {
            derivs.fill(Output::Symbol(y), &mut d1, &mut d2);
            g(pi_total(model.pi(), m), pi_total(model.pi(), &d1), pi_total(model.pi(), &d2))
        })
        .sum()
}

/// `E_p[g(y, p(y), p'(y), p''(y))]` for Gaussian outputs, by quadrature over the output mixture.
fn gaussian_expectation<G: Fn(f64, f64, f64, f64) -> f64>(model: &HiddenMarkovModel, derivs: &MatrixDerivatives, order: usize, g: G) -> f64 {
    let ObservationMatrixSet::Gaussian { means, variance, .. } = model.observations() else {
        unreachable!("Gaussian outputs expected");
    };
    let n = model.num_states();
    let rule = GaussHermite::new(order);
    let (mut m, mut d1, mut d2) = (Matrix::zeros(n, n), Matrix::zeros(n, n), Matrix::zeros(n, n));
    let obs = model.observations();
    rule.mixture_expectation(&model.edge_occupancy(), means, *variance, |y| {
        let out = Output::Real(y);
        obs.fill(out, &mut m);
        derivs.fill(out, &mut d1, &mut d2);
        g(y, pi_total(model.pi(), &m), pi_total(model.pi(), &d1), pi_total(model.pi(), &d2))
    })
}

/// `H(Y_1)`, `dH(Y_1)/dθ = −Σ_y p' ln p` and `d²H(Y_1)/dθ² = −Σ_y (p'' ln p + p'²/p)`.
pub fn single_letter_entropy_and_derivatives<F: ParametrizedFamily + ?Sized>(family: &F, theta: f64) -> Result<SingleLetter> {
    single_letter_entropy_and_derivatives_with(family, theta, DEFAULT_ORDER)
}

pub fn single_letter_entropy_and_derivatives_with<F: ParametrizedFamily + ?Sized>(family: &F, theta: f64, order: usize) -> Result<SingleLetter> {
    check_domain(family, theta)?;
    verify_pi_constant(family)?;
    let model = family.model_at(theta)?;
    let derivs = family.derivatives(theta)?;
    let lnp = |p: f64| if p > 0.0 { p.ln() } else { 0.0 };
    let ratio = |a: f64, p: f64| if p > 0.0 { a / p } else { 0.0 };
    if model.is_gaussian() {
        let entropy = gaussian_expectation(&model, &derivs, order, |_, p, _, _| -lnp(p));
        let first = gaussian_expectation(&model, &derivs, order, |_, p, a, _| -ratio(a, p) * lnp(p));
        let second = gaussian_expectation(&model, &derivs, order, |_, p, a, b| -ratio(b, p) * lnp(p) - ratio(a, p).powi(2));
        return Ok(SingleLetter { entropy, first, second });
    }
    Ok(SingleLetter {
        entropy: finite_sum(&model, &derivs, |p, _, _| -p * lnp(p)),
        first: finite_sum(&model, &derivs, |p, a, _| -a * lnp(p)),
        second: finite_sum(&model, &derivs, |p, a, b| -b * lnp(p) - ratio(a * a, p)),
    })
}

/// `(c1, c2)` of the entropy rate at the family's designated high-noise point.
pub fn high_noise_derivatives<F: ParametrizedFamily + ?Sized>(family: &F) -> Result<(f64, f64)> {
    let point = designated_point(family)?;
    high_noise_derivatives_at(family, &point, DEFAULT_ORDER)
}

fn designated_point<F: ParametrizedFamily + ?Sized>(family: &F) -> Result<HighNoisePoint> {
    let theta = family.high_noise_point().ok_or_else(|| Error::NotHighNoise("family has no designated high-noise point".into()))?;
    detect_high_noise_point(family, theta)
}

/// `c1 = −Σ_y π^T M'(y) 1 ln s(y)` and
/// `c2 = −Σ_y π^T M''(y) 1 ln s(y) − Σ_y (π^T M'(y) 1)² / π^T M(y) 1`.
pub fn high_noise_derivatives_at<F: ParametrizedFamily + ?Sized>(family: &F, point: &HighNoisePoint, order: usize) -> Result<(f64, f64)> {
    verify_pi_constant(family)?;
    let model = family.model_at(point.theta_star)?;
    let derivs = family.derivatives(point.theta_star)?;
    let law = &point.scalar_law;
    match law {
        ScalarLaw::Finite(s) => {
            let ln_s = |y: usize| if s[y] > 0.0 { s[y].ln() } else { 0.0 };
            let n = model.num_states();
            let (mut d1, mut d2) = (Matrix::zeros(n, n), Matrix::zeros(n, n));
            let (mut c1, mut c2) = (0.0, 0.0);
            for (y, m) in model.observations().matrices().expect("finite alphabet").iter().enumerate() {
                derivs.fill(Output::Symbol(y), &mut d1, &mut d2);
                let (p, a, b) = (pi_total(model.pi(), m), pi_total(model.pi(), &d1), pi_total(model.pi(), &d2));
                c1 -= a * ln_s(y);
                c2 -= b * ln_s(y);
                if p > 0.0 {
                    c2 -= a * a / p;
                }
            }
            Ok((c1, c2))
        }
        ScalarLaw::Gaussian { mean, variance } => {
            let rule = GaussHermite::new(order);
            let n = model.num_states();
            let (mut m, mut d1, mut d2) = (Matrix::zeros(n, n), Matrix::zeros(n, n), Matrix::zeros(n, n));
            let obs = model.observations();
            let (mut c1, mut c2) = (0.0, 0.0);
            for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
                let y = mean + variance.sqrt() * z;
                let out = Output::Real(y);
                obs.fill(out, &mut m);
                derivs.fill(out, &mut d1, &mut d2);
                let s = law.at(out);
                let (p, a, b) = (pi_total(model.pi(), &m), pi_total(model.pi(), &d1), pi_total(model.pi(), &d2));
                // Integrals against dy become expectations under s after dividing by s(y).
                c1 -= w * a / s * s.ln();
                c2 -= w * (b / s * s.ln() + a * a / (p * s));
            }
            Ok((c1, c2))
        }
    }
}

/// `Σ e_ij m_ij² − (Σ e_ij m_ij)²` with `e_ij = π(i) p_ij`: the high-noise
/// curvature of a unit-variance Gaussian family with means `θ m_ij`.
pub fn gaussian_second_derivative(chain: &MarkovChain, means: &Matrix) -> f64 {
    let pi = chain.stationary_law();
    let (mut first, mut second) = (0.0, 0.0);
    for (i, j) in chain.valid_edges() {
        let e = pi[i] * chain.prob(i, j);
        let m = means[(i, j)];
        first += e * m;
        second += e * m * m;
    }
    second - first * first
}

/// Series at the family's designated high-noise point.
pub fn entropy_series<F: ParametrizedFamily + ?Sized>(family: &F) -> Result<SeriesExpansion> {
    let point = designated_point(family)?;
    entropy_series_at(family, &point, DEFAULT_ORDER)
}

pub fn entropy_series_at<F: ParametrizedFamily + ?Sized>(family: &F, point: &HighNoisePoint, order: usize) -> Result<SeriesExpansion> {
    let (c1, c2) = high_noise_derivatives_at(family, point, order)?;
    Ok(SeriesExpansion { theta_star: point.theta_star, c0: point.scalar_law.entropy(), c1, c2 })
}
