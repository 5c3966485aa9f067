//! Mutual-information rates and high-noise capacity expansions of finite-state channels.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::forward_step_into;
use crate::certificate::default_burn_in;
use crate::channel::{compose_irreducible, ChannelFamily, ChannelLaw, Composition, FiniteStateChannel, MarkovInput};
use crate::entropy::entropy_rate_terms;
use crate::error::{Error, Result};
use crate::estimator::EstimatorResult;
use crate::quadrature::DEFAULT_ORDER;
use crate::rng::SeedRecord;
use crate::series::{detect_high_noise_point, high_noise_derivatives_at};
use crate::simulate::Walk;

/// Tolerance on `C(θ*) = 0` and `C'(θ*) = 0`.
pub const PREMISE_TOL: f64 = 1e-10;

fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum()
}

/// `H(Y | X)` in closed form when the channel state is a function of past inputs.
fn closed_conditional_entropy(channel: &FiniteStateChannel, input: &MarkovInput, comp: &Composition) -> Option<f64> {
    if !channel.state_determined_by_inputs() {
        return None;
    }
    match channel.law() {
        ChannelLaw::IsiGaussian { variance, .. } => Some(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()),
        ChannelLaw::Finite { .. } => {
            let pi = comp.output.pi();
            Some(
                comp.states
                    .iter()
                    .enumerate()
                    .map(|(q, &(s, h))| {
                        pi[q] * (0..input.num_inputs()).map(|x| input.prob(h, x) * entropy_of(&channel.output_law(s, x))).sum::<f64>()
                    })
                    .sum(),
            )
        }
    }
}

/// `I = H(Y) − H(Y | X)` per channel use, from one simulated path of `n` steps.
///
/// `H(Y | X)` is exact when the channel state follows from the inputs;
/// otherwise each step contributes `−ln ψ^Y_t + ln ψ^{XY}_t − ln Pr(x_t | history)`
/// along a single joint path, so both entropies share their random numbers.
pub fn mutual_information_rate_mc(channel: &FiniteStateChannel, input: &MarkovInput, n: usize, seed: u64) -> Result<EstimatorResult> {
    mutual_information_rate_mc_with(channel, input, n, None, seed)
}

/// As [`mutual_information_rate_mc`], with an explicit burn-in instead of the certificate default.
pub fn mutual_information_rate_mc_with(
    channel: &FiniteStateChannel,
    input: &MarkovInput,
    n: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<EstimatorResult> {
    let comp = compose_irreducible(channel, input)?;
    let burn_in = burn_in.unwrap_or_else(|| default_burn_in(&comp.output));
    if let Some(conditional) = closed_conditional_entropy(channel, input, &comp) {
        let terms = entropy_rate_terms(&comp.output, n, burn_in, seed)?;
        let values: Vec<f64> = terms.iter().map(|t| t - conditional).collect();
        return Ok(EstimatorResult::batch_means(&values, SeedRecord::new(seed)));
    }
    let joint = comp.joint.as_ref().ok_or(Error::RequiresFiniteAlphabet)?;
    if n == 0 {
        return Err(Error::InvalidArgument("path length must be positive".into()));
    }
    if n < 10 * burn_in {
        return Err(Error::PathTooShort { n, burn_in });
    }
    let outputs = channel.num_outputs().ok_or(Error::RequiresFiniteAlphabet)?;
    let out_ms = comp.output.observations().matrices().ok_or(Error::RequiresFiniteAlphabet)?;
    let joint_ms = joint.observations().matrices().ok_or(Error::RequiresFiniteAlphabet)?;
    let mut rng = SeedRecord::new(seed).rng();
    let q = comp.output.num_states();
    let (mut a_out, mut a_joint) = (comp.output.pi().to_vec(), joint.pi().to_vec());
    let mut next = vec![0.0; q];
    let mut walk = Walk::start(joint, &mut rng);
    let mut values = Vec::with_capacity(n - burn_in);
    for t in 0..n {
        let from = walk.state;
        let symbol = walk.step(joint, &mut rng).symbol();
        let (x, y) = (symbol / outputs, symbol % outputs);
        let psi_out = forward_step_into(&a_out, &out_ms[y], &mut next)?;
        std::mem::swap(&mut a_out, &mut next);
        let psi_joint = forward_step_into(&a_joint, &joint_ms[symbol], &mut next)?;
        std::mem::swap(&mut a_joint, &mut next);
        if t >= burn_in {
            values.push(-psi_out.ln() + psi_joint.ln() - comp.input_prob(input, from, x).ln());
        }
    }
    Ok(EstimatorResult::batch_means(&values, SeedRecord::new(seed)))
}

/// Leading coefficient `8(1 − p00)/(2 − p00)²` (nats per θ²) of the mutual
/// information of a (0,1) run-length-limited Markov input through a BSC with
/// crossover `1/2 − θ`. Largest at `p00 = 0`, where it equals 2.
pub fn rll_bsc_capacity_coefficient(p00: f64) -> f64 {
    8.0 * (1.0 - p00) / ((2.0 - p00) * (2.0 - p00))
}

/// `(c0, c1, c2)` of `H(Y | X; θ)` at the family's high-noise point.
pub fn conditional_entropy_series(family: &ChannelFamily, input: &MarkovInput) -> Result<(f64, f64, f64)> {
    let theta_star = family.theta_star().ok_or_else(|| Error::NotHighNoise("family has no designated high-noise point".into()))?;
    let channel = family.channel_at(theta_star)?;
    if !channel.state_determined_by_inputs() {
        return Err(Error::NotApplicable("conditional entropy has no closed form when the channel state is hidden given the inputs".into()));
    }
    let comp = compose_irreducible(&channel, input)?;
    match family {
        ChannelFamily::IsiScale { .. } => {
            let c0 = closed_conditional_entropy(&channel, input, &comp).expect("ISI state follows the inputs");
            Ok((c0, 0.0, 0.0))
        }
        ChannelFamily::Linear { base, direction, .. } => {
            let ChannelLaw::Finite { outputs, .. } = base.law() else { unreachable!("linear families are finite") };
            let (ns, nx) = (base.num_states(), base.num_inputs());
            let pi = comp.output.pi();
            let (mut c0, mut c1, mut c2) = (0.0, 0.0, 0.0);
            for (q, &(s, h)) in comp.states.iter().enumerate() {
                for x in 0..nx {
                    let weight = pi[q] * input.prob(h, x);
                    if weight == 0.0 {
                        continue;
                    }
                    let w = channel.output_law(s, x);
                    for (y, &wy) in w.iter().enumerate() {
                        let d: f64 = (0..ns).map(|s2| direction[((s * nx + x) * outputs + y) * ns + s2]).sum();
                        if wy > 0.0 {
                            c0 -= weight * wy * wy.ln();
                            c1 -= weight * d * wy.ln();
                            c2 -= weight * d * d / wy;
                        }
                    }
                }
            }
            Ok((c0, c1, c2))
        }
    }
}

/// `d²I/dθ²` at the high-noise point: output-entropy curvature minus
/// conditional-entropy curvature, after checking `I(θ*) = I'(θ*) = 0`.
pub fn capacity_second_derivative(family: &ChannelFamily, input: &MarkovInput) -> Result<f64> {
    let theta_star = family.theta_star().ok_or_else(|| Error::NotHighNoise("family has no designated high-noise point".into()))?;
    let output = family.output_family(input)?;
    let point = detect_high_noise_point(&output, theta_star).map_err(|e| match e {
        Error::NotFactorized { residual, .. } => Error::NotHighNoise(format!("outputs depend on the state at θ* (residual {residual:.3e})")),
        other => other,
    })?;
    let (c1_out, c2_out) = high_noise_derivatives_at(&output, &point, DEFAULT_ORDER)?;
    let c0_out = point.scalar_law.entropy();
    let (c0_cond, c1_cond, c2_cond) = conditional_entropy_series(family, input)?;
    if (c0_out - c0_cond).abs() > PREMISE_TOL {
        return Err(Error::NotHighNoise(format!("I(θ*) = {:.3e}, expected 0", c0_out - c0_cond)));
    }
    if (c1_out - c1_cond).abs() > PREMISE_TOL {
        return Err(Error::NotHighNoise(format!("I'(θ*) = {:.3e}, expected 0", c1_out - c1_cond)));
    }
    Ok(c2_out - c2_cond)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRow {
    pub input_id: String,
    pub c2: f64,
    pub theta_check: f64,
    /// `c2 (θ − θ*)² / 2`.
    pub predicted: f64,
    pub i_mc: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub theta_star: f64,
    pub rows: Vec<CapacityRow>,
    /// Row with the largest `c2` (first on ties).
    pub argmax: usize,
}

/// Curvature, quadratic prediction and a Monte Carlo check at `theta_check` for each input.
pub fn capacity_expansion_report(
    family: &ChannelFamily,
    inputs: &[(String, MarkovInput)],
    theta_check: f64,
    n: usize,
    burn_in: Option<usize>,
    seed: u64,
) -> Result<CapacityReport> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("input grid must not be empty".into()));
    }
    let theta_star = family.theta_star().ok_or_else(|| Error::NotHighNoise("family has no designated high-noise point".into()))?;
    let channel = family.channel_at(theta_check)?;
    let rows = inputs
        .par_iter()
        .map(|(id, input)| {
            let c2 = capacity_second_derivative(family, input)?;
            let mc = mutual_information_rate_mc_with(&channel, input, n, burn_in, seed)?;
            let d = theta_check - theta_star;
            Ok(CapacityRow { input_id: id.clone(), c2, theta_check, predicted: 0.5 * c2 * d * d, i_mc: mc.estimate, std_error: mc.std_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = rows.iter().enumerate().fold(0, |best, (k, r)| if r.c2 > rows[best].c2 { k } else { best });
    Ok(CapacityReport { theta_star, rows, argmax })
}
