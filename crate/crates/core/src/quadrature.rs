//! Gauss–Hermite rules for expectations under normal laws.

use crate::linalg::Matrix;

/// Default number of nodes.
pub const DEFAULT_ORDER: usize = 64;

/// Nodes and weights with `E[g(Z)] ≈ Σ w_k g(z_k)` for `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the orthonormal Hermite recurrence, then rescaled
    /// from the weight `e^{-x^2}` to the standard normal density.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "quadrature order must be positive");
        let n = order;
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        GaussHermite { nodes: x.iter().map(|v| std::f64::consts::SQRT_2 * v).collect(), weights: w.iter().map(|v| v / sqrt_pi).collect() }
    }

    /// `E[g(Y)]` for `Y ~ N(mean, variance)`.
    pub fn normal_expectation<G: FnMut(f64) -> f64>(&self, mean: f64, variance: f64, mut g: G) -> f64 {
        let sd = variance.sqrt();
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * g(mean + sd * z)).sum()
    }

    /// `E[g(Y)]` for `Y` drawn from the mixture `Σ_ij weights_ij N(means_ij, variance)`.
    pub fn mixture_expectation<G: FnMut(f64) -> f64>(&self, weights: &Matrix, means: &Matrix, variance: f64, mut g: G) -> f64 {
        let mut total = 0.0;
        for (&wt, &mu) in weights.as_slice().iter().zip(means.as_slice()) {
            if wt > 0.0 {
                total += wt * self.normal_expectation(mu, variance, &mut g);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_standard_normal() {
        let gh = GaussHermite::new(DEFAULT_ORDER);
        let moment = |k: i32| gh.normal_expectation(0.0, 1.0, |y| y.powi(k));
        assert!((moment(0) - 1.0).abs() < 1e-13);
        assert!(moment(1).abs() < 1e-13);
        assert!((moment(2) - 1.0).abs() < 1e-12);
        assert!((moment(4) - 3.0).abs() < 1e-11);
        assert!((moment(8) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn small_rule_is_exact_for_low_degree() {
        let gh = GaussHermite::new(3);
        // Three nodes integrate degree 5 exactly.
        assert!((gh.normal_expectation(1.0, 4.0, |y| y * y) - 5.0).abs() < 1e-12);
        let mut nodes = gh.nodes.clone();
        nodes.sort_by(f64::total_cmp);
        assert!((nodes[2] - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn smooth_expectation_converges() {
        // E[cos Y] = e^{-1/2} for Y ~ N(0, 1).
        let gh = GaussHermite::new(DEFAULT_ORDER);
        assert!((gh.normal_expectation(0.0, 1.0, f64::cos) - (-0.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn mixture_weights_apply() {
        let gh = GaussHermite::new(16);
        let w = Matrix::from_rows(&[[0.25, 0.75]]);
        let m = Matrix::from_rows(&[[-1.0, 3.0]]);
        let mean = gh.mixture_expectation(&w, &m, 1.0, |y| y);
        assert!((mean - 2.0).abs() < 1e-12);
    }
}
