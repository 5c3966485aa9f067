//! Hilbert projective metric and Birkhoff contraction coefficients.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `ln max_{i,j} u(i) v(j) / (v(i) u(j))` for strictly positive `u`, `v`.
pub fn hilbert_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", u.len(), v.len())));
    }
    for (index, &value) in u.iter().chain(v).enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveVector { index: index % u.len().max(1), value });
        }
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for (a, b) in u.iter().zip(v) {
        let r = (a / b).ln();
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
    }
    Ok((max_ratio - min_ratio).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirkhoffCoefficients {
    /// `min_{i,j,k,l} M_ik M_jl / (M_jk M_il)`, in (0, 1].
    pub phi: f64,
    /// `(1 - sqrt(phi)) / (1 + sqrt(phi))`, in [0, 1).
    pub tau: f64,
}

/// φ and τ of an entrywise-positive matrix.
pub fn birkhoff_coefficients(m: &Matrix) -> Result<BirkhoffCoefficients> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !(m[(i, j)] > 0.0) {
                return Err(Error::ZeroEntry { row: i, col: j });
            }
        }
    }
    // Cross ratios over all row pairs (i, j) and column pairs (k, l).
    let mut phi = f64::INFINITY;
    for i in 0..m.rows() {
        for j in 0..m.rows() {
            for k in 0..m.cols() {
                for l in 0..m.cols() {
                    let r = (m[(i, k)] * m[(j, l)]) / (m[(j, k)] * m[(i, l)]);
                    phi = phi.min(r);
                }
            }
        }
    }
    let phi = phi.min(1.0);
    let s = phi.sqrt();
    Ok(BirkhoffCoefficients { phi, tau: (1.0 - s) / (1.0 + s) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(hilbert_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = hilbert_distance(&[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!((d - 4f64.ln()).abs() < 1e-15);
        assert!(hilbert_distance(&[0.4, 1.3, 2.0], &[0.2, 0.65, 1.0]).unwrap() < 1e-15);
    }

    #[test]
    fn distance_rejects_zero() {
        assert!(matches!(hilbert_distance(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::NonPositiveVector { index: 1, .. })));
    }

    #[test]
    fn birkhoff_examples() {
        // Smallest cross ratio is (1*4)/(3*2).
        let c = birkhoff_coefficients(&Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])).unwrap();
        assert!((c.phi - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.tau - 0.101_020_514_433_643_8).abs() < 1e-12);
        let r1 = birkhoff_coefficients(&Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]])).unwrap();
        assert_eq!(r1.phi, 1.0);
        assert_eq!(r1.tau, 0.0);
        assert!(matches!(birkhoff_coefficients(&Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]])), Err(Error::ZeroEntry { row: 0, col: 1 })));
    }
}
