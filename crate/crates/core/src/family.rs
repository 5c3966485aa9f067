//! One-parameter families of hidden Markov models `θ ↦ M_θ(y)`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::markov::MarkovChain;
use crate::model::{normal_density, HiddenMarkovModel, ObservationMatrixSet, Output};

/// Step for the central-difference fallback.
pub const FD_STEP: f64 = 1e-4;
/// Tolerance on the stationary law across the parameter grid.
pub const PI_CONSTANT_TOL: f64 = 1e-8;
const PI_GRID_POINTS: usize = 11;

/// `M'_θ(y)` and `M''_θ(y)` at one parameter value.
#[derive(Debug, Clone)]
pub enum MatrixDerivatives {
    Finite {
        first: Vec<Matrix>,
        second: Vec<Matrix>,
    },
    /// Means `θ m_ij` with fixed `p_ij` and variance.
    GaussianScale {
        p: Matrix,
        means: Matrix,
        theta: f64,
        variance: f64,
    },
    /// Central differences of Gaussian matrix evaluators.
    Stencil {
        minus: ObservationMatrixSet,
        center: ObservationMatrixSet,
        plus: ObservationMatrixSet,
        h: f64,
    },
}

impl MatrixDerivatives {
    pub fn fill(&self, y: Output, first: &mut Matrix, second: &mut Matrix) {
        match self {
            MatrixDerivatives::Finite { first: d1, second: d2 } => {
                let s = y.symbol();
                first.as_mut_slice().copy_from_slice(d1[s].as_slice());
                second.as_mut_slice().copy_from_slice(d2[s].as_slice());
            }
            MatrixDerivatives::GaussianScale { p, means, theta, variance } => {
                let v = y.value();
                let slots = first.as_mut_slice().iter_mut().zip(second.as_mut_slice().iter_mut());
                for (((d1, d2), &pij), &m) in slots.zip(p.as_slice()).zip(means.as_slice()) {
                    if pij > 0.0 {
                        let f = pij * normal_density(v, theta * m, *variance);
                        let score = (v - theta * m) * m / variance;
                        *d1 = f * score;
                        *d2 = f * (score * score - m * m / variance);
                    } else {
                        *d1 = 0.0;
                        *d2 = 0.0;
                    }
                }
            }
            MatrixDerivatives::Stencil { minus, center, plus, h } => {
                let n = first.rows();
                let (mut a, mut b, mut c) = (Matrix::zeros(n, n), Matrix::zeros(n, n), Matrix::zeros(n, n));
                minus.fill(y, &mut a);
                center.fill(y, &mut b);
                plus.fill(y, &mut c);
                for k in 0..n * n {
                    let (lo, mid, hi) = (a.as_slice()[k], b.as_slice()[k], c.as_slice()[k]);
                    first.as_mut_slice()[k] = (hi - lo) / (2.0 * h);
                    second.as_mut_slice()[k] = (hi - 2.0 * mid + lo) / (h * h);
                }
            }
        }
    }

    /// `Σ_y M'(y)` (an integral over `y` for Gaussian outputs).
    pub fn first_total(&self) -> Matrix {
        match self {
            MatrixDerivatives::Finite { first, .. } => first.iter().skip(1).fold(first[0].clone(), |acc, m| acc.add(m)),
            // Shifting a mean leaves every edge's total mass unchanged.
            MatrixDerivatives::GaussianScale { p, .. } => Matrix::zeros(p.rows(), p.cols()),
            MatrixDerivatives::Stencil { minus, plus, h, .. } => match (minus, plus) {
                (ObservationMatrixSet::Gaussian { p: lo, .. }, ObservationMatrixSet::Gaussian { p: hi, .. }) => hi.sub(lo).scale(0.5 / h),
                _ => unreachable!("stencils are only built for Gaussian outputs"),
            },
        }
    }
}

pub trait ParametrizedFamily: Send + Sync {
    /// Closed parameter interval `[lo, hi]`.
    fn domain(&self) -> (f64, f64);

    fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel>;

    /// Parameter value where `M(y) = s(y) P`, if the family has one.
    fn high_noise_point(&self) -> Option<f64> {
        None
    }

    /// Matrix derivatives at `theta`; central differences unless overridden.
    fn derivatives(&self, theta: f64) -> Result<MatrixDerivatives> {
        finite_difference_derivatives(self, theta, FD_STEP)
    }
}

pub fn check_domain<F: ParametrizedFamily + ?Sized>(family: &F, theta: f64) -> Result<()> {
    let (lo, hi) = family.domain();
    if !(theta >= lo && theta <= hi) {
        return Err(Error::OutOfDomain { theta, lo, hi });
    }
    Ok(())
}

/// Central differences of `M_θ(y)` with step `h`. For finite alphabets the
/// first derivative is re-projected so that `Σ_y M'(y) 1 = 0` holds exactly.
pub fn finite_difference_derivatives<F: ParametrizedFamily + ?Sized>(family: &F, theta: f64, h: f64) -> Result<MatrixDerivatives> {
    let minus = family.model_at(theta - h)?;
    let center = family.model_at(theta)?;
    let plus = family.model_at(theta + h)?;
    match (minus.observations(), center.observations(), plus.observations()) {
        (ObservationMatrixSet::Finite(a), ObservationMatrixSet::Finite(b), ObservationMatrixSet::Finite(c)) => {
            let mut first: Vec<Matrix> = a.iter().zip(c).map(|(lo, hi)| hi.sub(lo).scale(0.5 / h)).collect();
            let second = a.iter().zip(b).zip(c).map(|((lo, mid), hi)| hi.sub(&mid.scale(2.0)).add(lo).scale(1.0 / (h * h))).collect();
            project_zero_row_sums(&mut first, center.chain());
            Ok(MatrixDerivatives::Finite { first, second })
        }
        (a, b, c) => Ok(MatrixDerivatives::Stencil { minus: a.clone(), center: b.clone(), plus: c.clone(), h }),
    }
}

/// Spreads each row's residual `Σ_y Σ_j M'(y)_ij` evenly over its valid entries.
fn project_zero_row_sums(first: &mut [Matrix], chain: &MarkovChain) {
    let n = chain.num_states();
    let ny = first.len();
    for i in 0..n {
        let valid: Vec<usize> = (0..n).filter(|&j| chain.prob(i, j) > 0.0).collect();
        let residual: f64 = first.iter().map(|m| m.row(i).iter().sum::<f64>()).sum();
        let share = residual / (ny * valid.len()) as f64;
        for m in first.iter_mut() {
            for &j in &valid {
                m[(i, j)] -= share;
            }
        }
    }
}

/// Checks on an 11-point grid over the domain that the stationary law does not move.
pub fn verify_pi_constant<F: ParametrizedFamily + ?Sized>(family: &F) -> Result<()> {
    let (lo, hi) = family.domain();
    let reference = family.model_at(lo)?.pi().to_vec();
    for k in 1..PI_GRID_POINTS {
        let theta = lo + (hi - lo) * k as f64 / (PI_GRID_POINTS - 1) as f64;
        let pi = family.model_at(theta)?.pi().to_vec();
        let deviation = pi.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if deviation > PI_CONSTANT_TOL {
            return Err(Error::PiNotConstant { theta, deviation });
        }
    }
    Ok(())
}

/// `h_ij(y; θ) = h0 + θ h1 + θ² h2` on a fixed chain.
#[derive(Debug, Clone)]
pub struct PolynomialFamily {
    chain: MarkovChain,
    h0: Vec<Matrix>,
    h1: Vec<Matrix>,
    h2: Vec<Matrix>,
    domain: (f64, f64),
    theta_star: Option<f64>,
}

impl PolynomialFamily {
    pub fn new(chain: MarkovChain, h0: Vec<Matrix>, h1: Vec<Matrix>, h2: Vec<Matrix>, domain: (f64, f64), theta_star: Option<f64>) -> Result<Self> {
        let n = chain.num_states();
        let ny = h0.len();
        if h1.len() != ny || h2.len() != ny {
            return Err(Error::model("family", "coefficient tables must share the alphabet"));
        }
        for (name, table) in [("h", &h0), ("direction", &h1), ("curvature", &h2)] {
            if table.iter().any(|m| m.rows() != n || m.cols() != n) {
                return Err(Error::model(format!("family.{name}"), format!("expected {n}x{n} tables")));
            }
        }
        for (i, j) in chain.valid_edges() {
            for (name, table) in [("direction", &h1), ("curvature", &h2)] {
                let s: f64 = table.iter().map(|m| m[(i, j)]).sum();
                if s.abs() > 1e-12 {
                    return Err(Error::model(format!("family.{name}[{i}->{j}]"), format!("must sum to zero over symbols, got {s}")));
                }
            }
        }
        if !(domain.0 <= domain.1) {
            return Err(Error::model("family.domain", "lower end exceeds upper end"));
        }
        let family = PolynomialFamily { chain, h0, h1, h2, domain, theta_star };
        family.model_at(domain.0)?;
        family.model_at(domain.1)?;
        if let Some(t) = theta_star {
            check_domain(&family, t)?;
        }
        Ok(family)
    }

    pub fn linear(chain: MarkovChain, h0: Vec<Matrix>, direction: Vec<Matrix>, domain: (f64, f64), theta_star: Option<f64>) -> Result<Self> {
        let zeros = vec![Matrix::zeros(chain.num_states(), chain.num_states()); h0.len()];
        Self::new(chain, h0, direction, zeros, domain, theta_star)
    }

    /// Binary-symmetric observation of the destination state's label with
    /// crossover `ε = 1/2 - θ`, on `θ ∈ [-1/2, 1/2]`, high-noise point `θ = 0`.
    pub fn bsc(chain: MarkovChain, labels: &[usize]) -> Result<Self> {
        let n = chain.num_states();
        if labels.len() != n || labels.iter().any(|&l| l > 1) {
            return Err(Error::model("family.labels", "need one binary label per state"));
        }
        let h0 = vec![Matrix::from_fn(n, n, |_, _| 0.5); 2];
        let h1 = (0..2).map(|y| Matrix::from_fn(n, n, |_, j| if labels[j] == y { 1.0 } else { -1.0 })).collect();
        Self::linear(chain, h0, h1, (-0.5, 0.5), Some(0.0))
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    fn kernels_at(&self, theta: f64) -> Vec<Matrix> {
        (0..self.h0.len()).map(|y| self.h0[y].add(&self.h1[y].scale(theta)).add(&self.h2[y].scale(theta * theta))).collect()
    }
}

impl ParametrizedFamily for PolynomialFamily {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel> {
        check_domain(self, theta)?;
        let mut h = self.kernels_at(theta);
        // Clamp rounding noise at the boundary of the probability range.
        for m in h.iter_mut() {
            m.as_mut_slice().iter_mut().filter(|x| **x < 0.0 && **x > -1e-14).for_each(|x| *x = 0.0);
        }
        HiddenMarkovModel::finite(self.chain.clone(), &h)
    }

    fn high_noise_point(&self) -> Option<f64> {
        self.theta_star
    }

    fn derivatives(&self, theta: f64) -> Result<MatrixDerivatives> {
        check_domain(self, theta)?;
        let p = self.chain.matrix();
        let hadamard = |a: &Matrix| a.zip_with(p, |x, q| x * q);
        let first = (0..self.h0.len()).map(|y| hadamard(&self.h1[y].add(&self.h2[y].scale(2.0 * theta)))).collect();
        let second = self.h2.iter().map(|m| hadamard(&m.scale(2.0))).collect();
        Ok(MatrixDerivatives::Finite { first, second })
    }
}

/// Gaussian outputs with means `θ m_ij`; high-noise point `θ = 0`.
#[derive(Debug, Clone)]
pub struct GaussianScaleFamily {
    chain: MarkovChain,
    means: Matrix,
    variance: f64,
    domain: (f64, f64),
}

impl GaussianScaleFamily {
    pub fn new(chain: MarkovChain, means: Matrix, variance: f64, domain: (f64, f64)) -> Result<Self> {
        let family = GaussianScaleFamily { chain, means, variance, domain };
        family.model_at(0.0)?;
        Ok(family)
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn means(&self) -> &Matrix {
        &self.means
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl ParametrizedFamily for GaussianScaleFamily {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel> {
        HiddenMarkovModel::gaussian(self.chain.clone(), self.means.scale(theta), self.variance)
    }

    fn high_noise_point(&self) -> Option<f64> {
        Some(0.0)
    }

    fn derivatives(&self, theta: f64) -> Result<MatrixDerivatives> {
        Ok(MatrixDerivatives::GaussianScale { p: self.chain.matrix().clone(), means: self.means.clone(), theta, variance: self.variance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Wrapped<F>(F);

    impl<F: ParametrizedFamily> ParametrizedFamily for Wrapped<F> {
        fn domain(&self) -> (f64, f64) {
            self.0.domain()
        }
        fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel> {
            self.0.model_at(theta)
        }
    }

    #[test]
    fn closed_form_matches_differences() {
        let chain = MarkovChain::new(Matrix::from_rows(&[[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])).unwrap();
        let h0 = vec![Matrix::from_fn(3, 3, |_, _| 0.5); 2];
        let h1 = vec![Matrix::from_fn(3, 3, |i, j| 0.1 * (i as f64 - j as f64)), Matrix::from_fn(3, 3, |i, j| -0.1 * (i as f64 - j as f64))];
        let h2 = vec![Matrix::from_fn(3, 3, |i, _| 0.2 * i as f64), Matrix::from_fn(3, 3, |i, _| -0.2 * i as f64)];
        let fam = PolynomialFamily::new(chain, h0, h1, h2, (-0.5, 0.5), Some(0.0)).unwrap();
        let exact = fam.derivatives(0.2).unwrap();
        let fd = Wrapped(fam).derivatives(0.2).unwrap();
        let (mut a1, mut a2, mut b1, mut b2) = (Matrix::zeros(3, 3), Matrix::zeros(3, 3), Matrix::zeros(3, 3), Matrix::zeros(3, 3));
        for y in 0..2 {
            exact.fill(Output::Symbol(y), &mut a1, &mut a2);
            fd.fill(Output::Symbol(y), &mut b1, &mut b2);
            assert!(a1.sub(&b1).max_abs() < 1e-10);
            assert!(a2.sub(&b2).max_abs() < 1e-5);
        }
        assert!(fd.first_total().row_sums().iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn gaussian_closed_form_matches_stencil() {
        let chain = MarkovChain::two_state(0.7, 0.4).unwrap();
        let fam = GaussianScaleFamily::new(chain, Matrix::from_rows(&[[0.0, 2.0], [-2.0, 0.5]]), 1.5, (-1.0, 1.0)).unwrap();
        let exact = fam.derivatives(0.3).unwrap();
        let fd = Wrapped(fam).derivatives(0.3).unwrap();
        let (mut a1, mut a2, mut b1, mut b2) = (Matrix::zeros(2, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 2));
        for y in [-1.3, 0.0, 0.4, 2.2] {
            exact.fill(Output::Real(y), &mut a1, &mut a2);
            fd.fill(Output::Real(y), &mut b1, &mut b2);
            assert!(a1.sub(&b1).max_abs() < 1e-8);
            assert!(a2.sub(&b2).max_abs() < 1e-5);
        }
        assert!(fd.first_total().max_abs() == 0.0);
    }

    #[test]
    fn pi_varies_when_kernels_move_the_chain() {
        // The model's chain changes with θ: P_θ = [[0.5+θ, 0.5-θ], [0.5, 0.5]].
        struct Moving;
        impl ParametrizedFamily for Moving {
            fn domain(&self) -> (f64, f64) {
                (-0.2, 0.2)
            }
            fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel> {
                let chain = MarkovChain::two_state(0.5 + theta, 0.5)?;
                HiddenMarkovModel::finite(chain, &crate::model::bsc_kernels(&[0, 1], 0.2))
            }
        }
        assert!(matches!(verify_pi_constant(&Moving), Err(Error::PiNotConstant { .. })));
        let bsc = PolynomialFamily::bsc(MarkovChain::two_state(0.9, 0.5).unwrap(), &[0, 1]).unwrap();
        assert!(verify_pi_constant(&bsc).is_ok());
    }

    #[test]
    fn bsc_family_matches_kernel_construction() {
        let chain = MarkovChain::two_state(0.9, 0.5).unwrap();
        let fam = PolynomialFamily::bsc(chain.clone(), &[0, 1]).unwrap();
        let direct = HiddenMarkovModel::finite(chain, &crate::model::bsc_kernels(&[0, 1], 0.35)).unwrap();
        let via = fam.model_at(0.15).unwrap();
        for y in 0..2 {
            let a = via.observations().matrix(Output::Symbol(y));
            let b = direct.observations().matrix(Output::Symbol(y));
            assert!(a.sub(&b).max_abs() < 1e-15);
        }
        assert!(matches!(fam.model_at(0.6), Err(Error::OutOfDomain { .. })));
    }
}
