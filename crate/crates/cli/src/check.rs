//! Invariant suite run by `hmprate check`.

use hmprate::belief::{backward_step_into, forward_step_into};
use hmprate::rng::stream_rng;
use hmprate::{
    birkhoff_coefficients, default_burn_in, hilbert_distance, measure_property_check, primitivity_certificate, simulate_path, Error,
    HiddenMarkovModel, Matrix, MatrixDerivatives,
};
use rand::Rng;

use crate::error::Result;
use crate::record::{Cell, Column, ResultRecord};

pub const CHECK_SEED: u64 = 20_240_601;
const DEFAULT_SAMPLES: usize = 10_000;
/// Blackwell samples each cost one burn-in; the suite caps the certificate default.
const MAX_DEFAULT_BURN_IN: usize = 2_000;
const PRODUCTS: usize = 200;
const ROUNDING_FLOOR: f64 = 1e-12;
const NORMALIZATION_STEPS: usize = 2_000;
const FORGETTING_PATHS: usize = 20;
const FORGETTING_STEPS: usize = 200;

enum Status {
    Pass,
    Fail,
    Skipped(String),
}

struct Group {
    name: &'static str,
    status: Status,
    residual: Option<f64>,
    tolerance: Option<f64>,
}

impl Group {
    fn judged(name: &'static str, residual: f64, tolerance: f64) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Group { name, status, residual: Some(residual), tolerance: Some(tolerance) }
    }

    fn skipped(name: &'static str, reason: impl Into<String>) -> Self {
        Group { name, status: Status::Skipped(reason.into()), residual: None, tolerance: None }
    }
}

/// Contraction, normalization, Blackwell-identity and forgetting checks with fixed seeds.
pub fn check(
    model: &HiddenMarkovModel,
    derivatives: Option<&MatrixDerivatives>,
    samples: Option<usize>,
    burn_in: Option<usize>,
    seed: Option<u64>,
) -> Result<ResultRecord> {
    let seed = seed.unwrap_or(CHECK_SEED);
    let groups = vec![
        contraction(model, seed)?,
        normalization(model, seed)?,
        identities(model, derivatives, samples.unwrap_or(DEFAULT_SAMPLES), burn_in, seed)?,
        forgetting(model, seed)?,
    ];
    let mut record = ResultRecord::new(
        "check",
        vec![Column::plain("group"), Column::plain("status"), Column::plain("residual"), Column::plain("tolerance"), Column::plain("note")],
    );
    for g in groups {
        let (status, note) = match g.status {
            Status::Pass => ("pass", String::new()),
            Status::Fail => {
                record.passed = false;
                ("fail", String::new())
            }
            Status::Skipped(reason) => ("skipped", reason),
        };
        record.push(vec![g.name.into(), status.into(), g.residual.into(), g.tolerance.into(), Cell::Text(note)]);
    }
    Ok(record)
}

fn random_positive<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.01..1.0)).collect()
}

/// Birkhoff's inequality on products of `k` consecutive observation matrices
/// along a simulated path, `k` being the primitivity index of the chain.
fn contraction(model: &HiddenMarkovModel, seed: u64) -> Result<Group> {
    let chain = model.chain();
    let Some(k) = chain.primitivity_index(chain.wielandt_bound()) else {
        return Ok(Group::skipped("contraction", "chain is not primitive"));
    };
    let path = simulate_path(model, PRODUCTS * k, seed);
    let mut rng = stream_rng(seed, 1);
    let q = model.num_states();
    let obs = model.observations();
    let mut worst = f64::NEG_INFINITY;
    for window in path.outputs.chunks(k) {
        let product = window.iter().fold(Matrix::identity(q), |acc, &y| acc.matmul(&obs.matrix(y)));
        let tau = match birkhoff_coefficients(&product) {
            Ok(c) => c.tau,
            // Gaussian densities can underflow to exact zeros far in the tails.
            Err(Error::ZeroEntry { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let (u, v) = (random_positive(&mut rng, q), random_positive(&mut rng, q));
        let before = hilbert_distance(&u, &v)?;
        let after = hilbert_distance(&product.vec_mul(&u), &product.vec_mul(&v))?;
        worst = worst.max(after - tau * before);
    }
    Ok(Group::judged("contraction", worst.max(0.0), 1e-10))
}

/// Forward beliefs stay on the simplex and backward beliefs keep `π^T β = 1`.
fn normalization(model: &HiddenMarkovModel, seed: u64) -> Result<Group> {
    let path = simulate_path(model, NORMALIZATION_STEPS, seed);
    let q = model.num_states();
    let pi = model.pi();
    let obs = model.observations();
    let mut m = Matrix::zeros(q, q);
    let (mut alpha, mut beta) = (pi.to_vec(), vec![1.0; q]);
    let mut next = vec![0.0; q];
    let mut worst: f64 = 0.0;
    for &y in &path.outputs {
        obs.fill(y, &mut m);
        forward_step_into(&alpha, &m, &mut next)?;
        std::mem::swap(&mut alpha, &mut next);
        worst = worst.max((alpha.iter().sum::<f64>() - 1.0).abs());
    }
    for &y in path.outputs.iter().rev() {
        obs.fill(y, &mut m);
        backward_step_into(&beta, &m, pi, &mut next)?;
        std::mem::swap(&mut beta, &mut next);
        worst = worst.max((pi.iter().zip(&beta).map(|(p, b)| p * b).sum::<f64>() - 1.0).abs());
    }
    Ok(Group::judged("normalization", worst, 1e-12))
}

/// Expectation identities of the forward and backward Blackwell measures,
/// within three standard errors, or exactly zero when outputs carry no state information.
fn identities(
    model: &HiddenMarkovModel,
    derivatives: Option<&MatrixDerivatives>,
    samples: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<Group> {
    if !model.chain().is_primitive() {
        return Ok(Group::skipped("blackwell-identities", "chain is not primitive"));
    }
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(model).min(MAX_DEFAULT_BURN_IN));
    let report = measure_property_check(model, derivatives, samples, Some(burn_in), seed)?;
    if model.factorization(1e-10).is_some() {
        let worst = report.identities.iter().fold(0.0f64, |m, r| m.max(r.max_abs()));
        return Ok(Group::judged("blackwell-identities", worst, 0.0));
    }
    // Largest residual in units of its own standard error. Identities that hold
    // sample by sample leave rounding noise with an even smaller standard error.
    let worst = report
        .identities
        .iter()
        .flat_map(|r| r.residual.iter().zip(&r.std_error))
        .map(|(r, s)| {
            let excess = (r.abs() - ROUNDING_FLOOR).max(0.0);
            if excess == 0.0 {
                0.0
            } else if *s > 0.0 {
                excess / s
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0f64, f64::max);
    Ok(Group::judged("blackwell-identities", worst, 3.0))
}

/// Two forward recursions from different starts approach each other at least
/// as fast as the primitivity certificate promises.
fn forgetting(model: &HiddenMarkovModel, seed: u64) -> Result<Group> {
    let cert = match primitivity_certificate(model, model.chain().wielandt_bound()) {
        Ok(c) => c,
        Err(e @ (Error::NotApplicable(_) | Error::ZeroObservationProbability { .. } | Error::NotPrimitiveWithin(_))) => {
            return Ok(Group::skipped("forgetting", e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let q = model.num_states();
    let obs = model.observations();
    let mut rng = stream_rng(seed, 2);
    let mut m = Matrix::zeros(q, q);
    let mut next = vec![0.0; q];
    let mut worst = f64::NEG_INFINITY;
    for p in 0..FORGETTING_PATHS {
        let path = simulate_path(model, FORGETTING_STEPS, seed.wrapping_add(p as u64 + 1));
        let mut a = random_positive(&mut rng, q);
        let s: f64 = a.iter().sum();
        a.iter_mut().for_each(|x| *x /= s);
        let mut b = model.pi().to_vec();
        for (t, &y) in path.outputs.iter().enumerate() {
            obs.fill(y, &mut m);
            forward_step_into(&a, &m, &mut next)?;
            std::mem::swap(&mut a, &mut next);
            forward_step_into(&b, &m, &mut next)?;
            std::mem::swap(&mut b, &mut next);
            if t + 1 >= cert.k {
                let bound = cert.forgetting_bound(t + 1);
                worst = worst.max(hilbert_distance(&a, &b)? - bound);
            }
        }
    }
    Ok(Group::judged("forgetting", worst.max(0.0), 1e-9))
}
