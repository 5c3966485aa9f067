//! Monte Carlo estimates with standard errors.

use serde::{Deserialize, Serialize};

use crate::rng::SeedRecord;

pub const NUM_BATCHES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    /// Point estimate (nats for entropies).
    pub estimate: f64,
    pub std_error: f64,
    /// Path length or number of independent samples averaged.
    pub n_samples: usize,
    pub seed: SeedRecord,
}

impl EstimatorResult {
    /// Mean of a correlated sequence with a batch-means standard error over
    /// [`NUM_BATCHES`] contiguous batches.
    pub fn batch_means(values: &[f64], seed: SeedRecord) -> Self {
        let n = values.len();
        let estimate = values.iter().sum::<f64>() / n as f64;
        let b = NUM_BATCHES.min(n);
        let std_error = if b < 2 {
            0.0
        } else {
            let means: Vec<f64> = (0..b)
                .map(|k| {
                    let chunk = &values[k * n / b..(k + 1) * n / b];
                    chunk.iter().sum::<f64>() / chunk.len() as f64
                })
                .collect();
            let grand = means.iter().sum::<f64>() / b as f64;
            let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        };
        EstimatorResult { estimate, std_error, n_samples: n, seed }
    }

    /// Mean of independent samples with the usual standard error.
    pub fn iid(values: &[f64], seed: SeedRecord) -> Self {
        let n = values.len();
        let estimate = values.iter().sum::<f64>() / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        EstimatorResult { estimate, std_error, n_samples: n, seed }
    }

    /// True when `|estimate - target| <= k σ + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_has_zero_error() {
        let r = EstimatorResult::batch_means(&[0.25; 300], SeedRecord::new(0));
        assert_eq!(r.estimate, 0.25);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(EstimatorResult::iid(&[1.0; 10], SeedRecord::new(0)).std_error, 0.0);
    }

    #[test]
    fn iid_error_formula() {
        let r = EstimatorResult::iid(&[1.0, 2.0, 3.0, 4.0], SeedRecord::new(0));
        assert_eq!(r.estimate, 2.5);
        assert!((r.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
