//! Normalized forward and backward recursions.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Forward belief α (on the simplex) and backward belief β (with `π^T β = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPair {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BeliefPair {
    /// The pair at stationarity with no observations: `(π, 1)`.
    pub fn initial(pi: &[f64]) -> Self {
        BeliefPair { alpha: pi.to_vec(), beta: vec![1.0; pi.len()] }
    }

    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, pi: &[f64]) -> Result<Self> {
        if alpha.len() != pi.len() || beta.len() != pi.len() {
            return Err(Error::DimensionMismatch("belief and stationary law lengths differ".into()));
        }
        let sa: f64 = alpha.iter().sum();
        if (sa - 1.0).abs() > 1e-10 || alpha.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidArgument(format!("alpha is not on the simplex (sum {sa})")));
        }
        let sb = dot(pi, &beta);
        if (sb - 1.0).abs() > 1e-10 || beta.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidArgument(format!("beta is not pi-normalized (pi^T beta = {sb})")));
        }
        Ok(BeliefPair { alpha, beta })
    }
}

/// `α' = α^T M(y) / ψ` with `ψ = α^T M(y) 1`, written into `out`.
#[inline]
pub fn forward_step_into(alpha: &[f64], m: &Matrix, out: &mut [f64]) -> Result<f64> {
    m.vec_mul_into(alpha, out);
    let psi: f64 = out.iter().sum();
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(Error::DegenerateBelief(psi));
    }
    out.iter_mut().for_each(|x| *x /= psi);
    Ok(psi)
}

pub fn forward_step(alpha: &[f64], m: &Matrix) -> Result<(Vec<f64>, f64)> {
    let mut out = vec![0.0; alpha.len()];
    let psi = forward_step_into(alpha, m, &mut out)?;
    Ok((out, psi))
}

/// `β' = M(y) β / φ` with `φ = π^T M(y) β`, written into `out`.
#[inline]
pub fn backward_step_into(beta: &[f64], m: &Matrix, pi: &[f64], out: &mut [f64]) -> Result<f64> {
    m.mul_vec_into(beta, out);
    let phi = dot(pi, out);
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::DegenerateBelief(phi));
    }
    out.iter_mut().for_each(|x| *x /= phi);
    Ok(phi)
}

pub fn backward_step(beta: &[f64], m: &Matrix, pi: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut out = vec![0.0; beta.len()];
    let phi = backward_step_into(beta, m, pi, &mut out)?;
    Ok((out, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::MarkovChain;
    use crate::model::{bsc_kernels, HiddenMarkovModel, Output};
    use proptest::prelude::*;

    fn bsc(p00: f64, p11: f64, eps: f64) -> HiddenMarkovModel {
        HiddenMarkovModel::finite(MarkovChain::two_state(p00, p11).unwrap(), &bsc_kernels(&[0, 1], eps)).unwrap()
    }

    #[test]
    fn iid_state_bsc_step() {
        let model = bsc(0.5, 0.5, 0.1);
        let m0 = model.observations().matrix(Output::Symbol(0));
        let (a, psi) = forward_step(&[0.5, 0.5], &m0).unwrap();
        assert!((a[0] - 0.9).abs() < 1e-15 && (a[1] - 0.1).abs() < 1e-15);
        assert!((psi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn factorized_fixed_points() {
        let model = bsc(0.7, 0.4, 0.5);
        let m1 = model.observations().matrix(Output::Symbol(1));
        let (a, psi) = forward_step(model.pi(), &m1).unwrap();
        assert!(a.iter().zip(model.pi()).all(|(x, y)| (x - y).abs() < 1e-14));
        assert!((psi - 0.5).abs() < 1e-15);
        let (b, phi) = backward_step(&[1.0, 1.0], &m1, model.pi()).unwrap();
        assert!(b.iter().all(|x| (x - 1.0).abs() < 1e-14));
        assert!((phi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn backward_step_by_hand() {
        // p00 = 0.9, p11 = 0.5, ε = 0.2: M(0) = [[0.72, 0.02], [0.4, 0.1]], π = (5/6, 1/6).
        let model = bsc(0.9, 0.5, 0.2);
        let m0 = model.observations().matrix(Output::Symbol(0));
        let (b, phi) = backward_step(&[1.0, 1.0], &m0, model.pi()).unwrap();
        let (r0, r1) = (0.74, 0.5);
        let norm = 5.0 / 6.0 * r0 + 1.0 / 6.0 * r1;
        assert!((phi - norm).abs() < 1e-14);
        assert!((b[0] - r0 / norm).abs() < 1e-14 && (b[1] - r1 / norm).abs() < 1e-14);
    }

    #[test]
    fn impossible_observation() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.5]]);
        assert!(matches!(forward_step(&[1.0, 0.0], &m), Err(Error::DegenerateBelief(_))));
    }

    proptest! {
        #[test]
        fn steps_preserve_normalization(
            p00 in 0.05f64..0.95, p11 in 0.05f64..0.95, eps in 0.01f64..0.5,
            a0 in 0.0f64..1.0, ys in proptest::collection::vec(0usize..2, 1..40),
        ) {
            let model = bsc(p00, p11, eps);
            let pi = model.pi();
            let mut alpha = vec![a0, 1.0 - a0];
            let mut beta = vec![1.0, 1.0];
            for &y in &ys {
                let m = model.observations().matrix(Output::Symbol(y));
                alpha = forward_step(&alpha, &m).unwrap().0;
                beta = backward_step(&beta, &m, pi).unwrap().0;
                prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!((dot(pi, &beta) - 1.0).abs() < 1e-12);
            }
        }
    }
}
