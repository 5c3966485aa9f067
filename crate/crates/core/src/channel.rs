//! Finite-state channels driven by Markov inputs, and the hidden Markov models they induce.

use crate::error::{Error, Result};
use crate::family::{GaussianScaleFamily, MatrixDerivatives, ParametrizedFamily, PolynomialFamily};
use crate::graph::Digraph;
use crate::linalg::Matrix;
use crate::markov::MarkovChain;
use crate::model::HiddenMarkovModel;

const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelLaw {
    /// `W(y, s' | x, s)` stored at `((s X + x) Y + y) S + s'`.
    Finite { outputs: usize, w: Vec<f64> },
    /// Next state `next_state[s X + x]`, output `N(means[s X + x], variance)`.
    IsiGaussian { next_state: Vec<usize>, means: Vec<f64>, variance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteStateChannel {
    states: usize,
    inputs: usize,
    law: ChannelLaw,
}

impl FiniteStateChannel {
    pub fn finite(states: usize, inputs: usize, outputs: usize, w: Vec<f64>) -> Result<Self> {
        if states == 0 || inputs == 0 || outputs == 0 {
            return Err(Error::model("channel", "state, input and output alphabets must be non-empty"));
        }
        if w.len() != states * inputs * outputs * states {
            return Err(Error::model("W", format!("expected {} entries, got {}", states * inputs * outputs * states, w.len())));
        }
        for s in 0..states {
            for x in 0..inputs {
                let block = &w[(s * inputs + x) * outputs * states..(s * inputs + x + 1) * outputs * states];
                if let Some(k) = block.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(Error::model(format!("W[{s}][{x}][{}][{}]", k / states, k % states), "entry is not a probability"));
                }
                let total: f64 = block.iter().sum();
                if (total - 1.0).abs() > KERNEL_TOL {
                    return Err(Error::model(format!("W[{s}][{x}]"), format!("sums to {total}, expected 1")));
                }
            }
        }
        Ok(FiniteStateChannel { states, inputs, law: ChannelLaw::Finite { outputs, w } })
    }

    /// A single-state channel with transition matrix `w[x][y]`.
    pub fn memoryless(w: &Matrix) -> Result<Self> {
        Self::finite(1, w.rows(), w.cols(), w.as_slice().to_vec())
    }

    /// Binary symmetric channel with crossover `epsilon`.
    pub fn bsc(epsilon: f64) -> Result<Self> {
        Self::memoryless(&Matrix::from_rows(&[[1.0 - epsilon, epsilon], [epsilon, 1.0 - epsilon]]))
    }

    pub fn isi(states: usize, inputs: usize, next_state: Vec<usize>, means: Vec<f64>, variance: f64) -> Result<Self> {
        if states == 0 || inputs == 0 {
            return Err(Error::model("channel", "state and input alphabets must be non-empty"));
        }
        if next_state.len() != states * inputs || means.len() != states * inputs {
            return Err(Error::model("isi", format!("expected {} transitions", states * inputs)));
        }
        if let Some(k) = next_state.iter().position(|&t| t >= states) {
            return Err(Error::model(format!("isi.next_state[{}][{}]", k / inputs, k % inputs), "state out of range"));
        }
        if let Some(k) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::model(format!("isi.means[{}][{}]", k / inputs, k % inputs), "mean must be finite"));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::model("isi.variance", "must be positive and finite"));
        }
        Ok(FiniteStateChannel { states, inputs, law: ChannelLaw::IsiGaussian { next_state, means, variance } })
    }

    /// Response `1 - D` on inputs `±1`: input 0 is `+1`, input 1 is `-1`, the
    /// state is the previous input and the mean is `x_t - x_{t-1}`.
    pub fn dicode(variance: f64) -> Result<Self> {
        let level = [1.0, -1.0];
        let next = vec![0, 1, 0, 1];
        let means = (0..4).map(|k| level[k % 2] - level[k / 2]).collect();
        Self::isi(2, 2, next, means, variance)
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    /// Output alphabet size, or `None` for Gaussian outputs.
    pub fn num_outputs(&self) -> Option<usize> {
        match &self.law {
            ChannelLaw::Finite { outputs, .. } => Some(*outputs),
            ChannelLaw::IsiGaussian { .. } => None,
        }
    }

    pub fn law(&self) -> &ChannelLaw {
        &self.law
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.law, ChannelLaw::IsiGaussian { .. })
    }

    /// `W(y, s' | x, s)` for finite outputs.
    pub fn w(&self, s: usize, x: usize, y: usize, s2: usize) -> f64 {
        match &self.law {
            ChannelLaw::Finite { outputs, w } => w[((s * self.inputs + x) * outputs + y) * self.states + s2],
            ChannelLaw::IsiGaussian { .. } => panic!("Gaussian channel has no finite kernel"),
        }
    }

    /// Next state as a function of `(s, x)`, when the channel state moves deterministically.
    pub fn next_state_map(&self) -> Option<Vec<usize>> {
        match &self.law {
            ChannelLaw::IsiGaussian { next_state, .. } => Some(next_state.clone()),
            ChannelLaw::Finite { outputs, .. } => (0..self.states * self.inputs)
                .map(|k| {
                    let (s, x) = (k / self.inputs, k % self.inputs);
                    let mut targets = (0..self.states).filter(|&s2| (0..*outputs).any(|y| self.w(s, x, y, s2) > 0.0));
                    let first = targets.next()?;
                    targets.next().is_none().then_some(first)
                })
                .collect(),
        }
    }

    /// True when every long enough input word leaves a single possible state,
    /// so the state sequence is a function of the inputs.
    pub fn state_determined_by_inputs(&self) -> bool {
        let Some(next) = self.next_state_map() else {
            return false;
        };
        let mut level: Vec<Vec<usize>> = vec![(0..self.states).collect()];
        for _ in 0..=self.states * self.states {
            if level.iter().all(|set| set.len() == 1) {
                return true;
            }
            let mut following: Vec<Vec<usize>> = Vec::new();
            for set in &level {
                for x in 0..self.inputs {
                    let mut image: Vec<usize> = set.iter().map(|&s| next[s * self.inputs + x]).collect();
                    image.sort_unstable();
                    image.dedup();
                    if !following.contains(&image) {
                        following.push(image);
                    }
                }
            }
            level = following;
        }
        false
    }

    /// Output distribution `Σ_{s'} W(·, s' | x, s)` for finite outputs.
    pub fn output_law(&self, s: usize, x: usize) -> Vec<f64> {
        let outputs = self.num_outputs().expect("finite outputs");
        (0..outputs).map(|y| (0..self.states).map(|s2| self.w(s, x, y, s2)).sum()).collect()
    }
}

/// Input process with `Pr(X_t = x | X_{t-m}^{t-1} = h)` stored at `h |X| + x`,
/// the history `h` read as a base-`|X|` number with the oldest symbol first.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovInput {
    memory: usize,
    inputs: usize,
    table: Vec<f64>,
}

impl MarkovInput {
    pub fn new(memory: usize, inputs: usize, table: Vec<f64>) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::model("input_law", "input alphabet must be non-empty"));
        }
        let histories = inputs.checked_pow(memory as u32).ok_or_else(|| Error::model("input_law.memory", "too large"))?;
        if table.len() != histories * inputs {
            return Err(Error::model("input_law.table", format!("expected {} entries, got {}", histories * inputs, table.len())));
        }
        for h in 0..histories {
            let row = &table[h * inputs..(h + 1) * inputs];
            if let Some(x) = row.iter().position(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::model(format!("input_law.table[{h}][{x}]"), "entry is not a probability"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > KERNEL_TOL {
                return Err(Error::model(format!("input_law.table[{h}]"), format!("sums to {total}, expected 1")));
            }
        }
        Ok(MarkovInput { memory, inputs, table })
    }

    pub fn iid(probs: &[f64]) -> Result<Self> {
        Self::new(0, probs.len(), probs.to_vec())
    }

    /// First-order input with `Pr(x | previous) = p[previous][x]`.
    pub fn first_order(p: &Matrix) -> Result<Self> {
        Self::new(1, p.cols(), p.as_slice().to_vec())
    }

    /// Binary input forbidding two consecutive ones, staying at 0 with probability `p00`.
    pub fn rll01(p00: f64) -> Result<Self> {
        Self::first_order(&Matrix::from_rows(&[[p00, 1.0 - p00], [1.0, 0.0]]))
    }

    /// First-order input whose pair law is the edge occupancy `e[prev][x]`.
    /// Histories without mass get a uniform row.
    pub fn from_edge_occupancy(e: &Matrix) -> Result<Self> {
        let n = e.rows();
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            let total: f64 = e.row(i).iter().sum();
            for j in 0..n {
                p[(i, j)] = if total > 0.0 { e[(i, j)] / total } else { 1.0 / n as f64 };
            }
        }
        Self::first_order(&p)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_histories(&self) -> usize {
        self.table.len() / self.inputs
    }

    pub fn prob(&self, history: usize, x: usize) -> f64 {
        self.table[history * self.inputs + x]
    }

    pub fn next_history(&self, history: usize, x: usize) -> usize {
        (history * self.inputs + x) % self.num_histories()
    }
}

/// Joint chain on `(channel state, input history)` pairs, restricted to its closed class.
#[derive(Debug, Clone)]
pub struct Composition {
    /// Model emitting the channel output.
    pub output: HiddenMarkovModel,
    /// Model emitting the pair `(x, y)` as symbol `x |Y| + y`; finite outputs only.
    pub joint: Option<HiddenMarkovModel>,
    /// `(s, h)` for each retained state.
    pub states: Vec<(usize, usize)>,
}

impl Composition {
    /// `Pr(X_t = x | Q_t = q)`.
    pub fn input_prob(&self, input: &MarkovInput, q: usize, x: usize) -> f64 {
        input.prob(self.states[q].1, x)
    }

    /// Entropy rate of the input process in nats.
    pub fn input_entropy_rate(&self, input: &MarkovInput) -> f64 {
        let pi = self.output.pi();
        (0..self.states.len())
            .map(|q| pi[q] * (0..input.num_inputs()).map(|x| input.prob(self.states[q].1, x)).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum::<f64>())
            .sum()
    }
}

/// `(s, h, x, h', P(x | h))`: channel state, input history, input, next history.
type ProductTransition = (usize, usize, usize, usize, f64);

/// Transitions of the full product chain with their input probability.
fn product_transitions(channel: &FiniteStateChannel, input: &MarkovInput) -> Result<Vec<ProductTransition>> {
    if input.num_inputs() != channel.num_inputs() {
        return Err(Error::InvalidArgument(format!("input law has {} symbols, channel has {}", input.num_inputs(), channel.num_inputs())));
    }
    let nh = input.num_histories();
    let mut out = Vec::new();
    for s in 0..channel.num_states() {
        for h in 0..nh {
            for x in 0..input.num_inputs() {
                let px = input.prob(h, x);
                if px > 0.0 {
                    out.push((s, h, x, input.next_history(h, x), px));
                }
            }
        }
    }
    Ok(out)
}

/// Full product-space matrices `M(y)`, plus joint `(x, y)` matrices when asked.
fn finite_product_matrices(
    channel: &FiniteStateChannel,
    input: &MarkovInput,
    kernel: &dyn Fn(usize, usize, usize, usize) -> f64,
    with_joint: bool,
) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    let outputs = channel.num_outputs().ok_or(Error::RequiresFiniteAlphabet)?;
    let (ns, nh, nx) = (channel.num_states(), input.num_histories(), input.num_inputs());
    let n = ns * nh;
    let mut ms = vec![Matrix::zeros(n, n); outputs];
    let mut joint = if with_joint { vec![Matrix::zeros(n, n); outputs * nx] } else { Vec::new() };
    for (s, h, x, h2, px) in product_transitions(channel, input)? {
        for s2 in 0..ns {
            for (y, m) in ms.iter_mut().enumerate() {
                let v = px * kernel(s, x, y, s2);
                m[(s * nh + h, s2 * nh + h2)] += v;
                if with_joint {
                    joint[x * outputs + y][(s * nh + h, s2 * nh + h2)] += v;
                }
            }
        }
    }
    Ok((ms, joint))
}

/// The unique closed class of the chain with the given transition support.
fn closed_class(p: &Matrix) -> Result<Vec<usize>> {
    let classes = Digraph::support(p).closed_classes();
    match classes.len() {
        1 => Ok(classes.into_iter().next().expect("one class")),
        k => Err(Error::NotPrimitive(format!("composed chain has {k} closed classes"))),
    }
}

fn restrict(m: &Matrix, keep: &[usize]) -> Matrix {
    Matrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])])
}

fn total(ms: &[Matrix]) -> Matrix {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.add(m))
}

/// Composition without the aperiodicity requirement.
pub(crate) fn compose_irreducible(channel: &FiniteStateChannel, input: &MarkovInput) -> Result<Composition> {
    let nh = input.num_histories();
    match channel.law() {
        ChannelLaw::Finite { .. } => {
            let (ms, joint) = finite_product_matrices(channel, input, &|s, x, y, s2| channel.w(s, x, y, s2), true)?;
            let keep = closed_class(&total(&ms))?;
            let output = HiddenMarkovModel::from_matrices(ms.iter().map(|m| restrict(m, &keep)).collect())?;
            let joint = HiddenMarkovModel::from_matrices(joint.iter().map(|m| restrict(m, &keep)).collect())?;
            let states = keep.iter().map(|&k| (k / nh, k % nh)).collect();
            Ok(Composition { output, joint: Some(joint), states })
        }
        ChannelLaw::IsiGaussian { next_state, means, variance } => {
            let (chain, edge_means, keep) = isi_product(channel, input, next_state, means)?;
            let output = HiddenMarkovModel::gaussian(chain, edge_means, *variance)?;
            let states = keep.iter().map(|&k| (k / nh, k % nh)).collect();
            Ok(Composition { output, joint: None, states })
        }
    }
}

/// Chain, per-edge means and retained product states of an ISI channel under `input`.
fn isi_product(channel: &FiniteStateChannel, input: &MarkovInput, next_state: &[usize], means: &[f64]) -> Result<(MarkovChain, Matrix, Vec<usize>)> {
    let (ns, nh, nx) = (channel.num_states(), input.num_histories(), input.num_inputs());
    let n = ns * nh;
    let mut p = Matrix::zeros(n, n);
    let mut m = Matrix::zeros(n, n);
    let mut seen = vec![false; n * n];
    for (s, h, x, h2, px) in product_transitions(channel, input)? {
        let (a, b) = (s * nh + h, next_state[s * nx + x] * nh + h2);
        let mean = means[s * nx + x];
        if seen[a * n + b] && m[(a, b)] != mean {
            return Err(Error::InvalidArgument(format!("inputs with different means share the transition {a}->{b}")));
        }
        seen[a * n + b] = true;
        p[(a, b)] += px;
        m[(a, b)] = mean;
    }
    let keep = closed_class(&p)?;
    Ok((MarkovChain::new(restrict(&p, &keep))?, restrict(&m, &keep), keep))
}

/// Output and joint models of `channel` driven by `input`; the composed chain must be primitive.
pub fn compose(channel: &FiniteStateChannel, input: &MarkovInput) -> Result<Composition> {
    let c = compose_irreducible(channel, input)?;
    if !c.output.chain().is_primitive() {
        return Err(Error::NotPrimitive("composed chain is periodic".into()));
    }
    Ok(c)
}

/// One-parameter channel families.
#[derive(Debug, Clone)]
pub enum ChannelFamily {
    /// `W_θ = W_0 + θ D` with `Σ_y D(y, s' | x, s) = 0`.
    Linear { base: FiniteStateChannel, direction: Vec<f64>, domain: (f64, f64), theta_star: Option<f64> },
    /// ISI means scaled by `θ`; high-noise point `θ = 0`.
    IsiScale { channel: FiniteStateChannel, domain: (f64, f64) },
}

impl ChannelFamily {
    pub fn linear(base: FiniteStateChannel, direction: Vec<f64>, domain: (f64, f64), theta_star: Option<f64>) -> Result<Self> {
        let ChannelLaw::Finite { outputs, w } = base.law() else {
            return Err(Error::RequiresFiniteAlphabet);
        };
        if direction.len() != w.len() {
            return Err(Error::model("family.direction", format!("expected {} entries", w.len())));
        }
        let (ns, nx) = (base.num_states(), base.num_inputs());
        for s in 0..ns {
            for x in 0..nx {
                for s2 in 0..ns {
                    let sum: f64 = (0..*outputs).map(|y| direction[((s * nx + x) * outputs + y) * ns + s2]).sum();
                    if sum.abs() > KERNEL_TOL {
                        return Err(Error::model(
                            format!("family.direction[{s}][{x}][*][{s2}]"),
                            format!("must sum to zero over outputs, got {sum}"),
                        ));
                    }
                }
            }
        }
        let family = ChannelFamily::Linear { base, direction, domain, theta_star };
        family.channel_at(domain.0)?;
        family.channel_at(domain.1)?;
        Ok(family)
    }

    /// BSC with crossover `1/2 − θ` on `θ ∈ [−1/2, 1/2]`.
    pub fn bsc() -> Result<Self> {
        let base = FiniteStateChannel::bsc(0.5)?;
        Self::linear(base, vec![1.0, -1.0, -1.0, 1.0], (-0.5, 0.5), Some(0.0))
    }

    pub fn isi(channel: FiniteStateChannel, domain: (f64, f64)) -> Result<Self> {
        if !channel.is_gaussian() {
            return Err(Error::InvalidArgument("ISI family needs a Gaussian ISI channel".into()));
        }
        Ok(ChannelFamily::IsiScale { channel, domain })
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            ChannelFamily::Linear { domain, .. } | ChannelFamily::IsiScale { domain, .. } => *domain,
        }
    }

    pub fn theta_star(&self) -> Option<f64> {
        match self {
            ChannelFamily::Linear { theta_star, .. } => *theta_star,
            ChannelFamily::IsiScale { .. } => Some(0.0),
        }
    }

    /// A channel with the family's state set and inputs, used for shape checks.
    pub fn base(&self) -> &FiniteStateChannel {
        match self {
            ChannelFamily::Linear { base, .. } => base,
            ChannelFamily::IsiScale { channel, .. } => channel,
        }
    }

    pub fn channel_at(&self, theta: f64) -> Result<FiniteStateChannel> {
        let (lo, hi) = self.domain();
        if !(theta >= lo && theta <= hi) {
            return Err(Error::OutOfDomain { theta, lo, hi });
        }
        match self {
            ChannelFamily::Linear { base, direction, .. } => {
                let ChannelLaw::Finite { outputs, w } = base.law() else { unreachable!("linear families are finite") };
                let w = w
                    .iter()
                    .zip(direction)
                    .map(|(a, d)| {
                        let v = a + theta * d;
                        if v < 0.0 && v > -1e-14 {
                            0.0
                        } else {
                            v
                        }
                    })
                    .collect();
                FiniteStateChannel::finite(base.num_states(), base.num_inputs(), *outputs, w)
            }
            ChannelFamily::IsiScale { channel, .. } => {
                let ChannelLaw::IsiGaussian { next_state, means, variance } = channel.law() else { unreachable!("ISI families are Gaussian") };
                FiniteStateChannel::isi(
                    channel.num_states(),
                    channel.num_inputs(),
                    next_state.clone(),
                    means.iter().map(|m| theta * m).collect(),
                    *variance,
                )
            }
        }
    }

    /// The output process under `input` as a parametrized hidden Markov family.
    pub fn output_family(&self, input: &MarkovInput) -> Result<OutputFamily> {
        match self {
            ChannelFamily::Linear { base, direction, domain, theta_star } => {
                let ChannelLaw::Finite { outputs, .. } = base.law() else { unreachable!("linear families are finite") };
                let (ns, nx) = (base.num_states(), base.num_inputs());
                let d = |s: usize, x: usize, y: usize, s2: usize| direction[((s * nx + x) * outputs + y) * ns + s2];
                let (m0, _) = finite_product_matrices(base, input, &|s, x, y, s2| base.w(s, x, y, s2), false)?;
                let (m1, _) = finite_product_matrices(base, input, &d, false)?;
                let keep = closed_class(&total(&m0))?;
                let m0: Vec<Matrix> = m0.iter().map(|m| restrict(m, &keep)).collect();
                let m1: Vec<Matrix> = m1.iter().map(|m| restrict(m, &keep)).collect();
                let chain = HiddenMarkovModel::from_matrices(m0.clone())?.chain().clone();
                let p = chain.matrix().clone();
                let divide = |m: &Matrix| m.zip_with(&p, |a, q| if q > 0.0 { a / q } else { 0.0 });
                let h0: Vec<Matrix> = m0.iter().map(divide).collect();
                let h1: Vec<Matrix> = m1.iter().map(divide).collect();
                Ok(OutputFamily::Finite(PolynomialFamily::linear(chain, h0, h1, *domain, *theta_star)?))
            }
            ChannelFamily::IsiScale { channel, domain } => {
                let ChannelLaw::IsiGaussian { next_state, means, variance } = channel.law() else { unreachable!("ISI families are Gaussian") };
                let (chain, edge_means, _) = isi_product(channel, input, next_state, means)?;
                Ok(OutputFamily::Gaussian(GaussianScaleFamily::new(chain, edge_means, *variance, *domain)?))
            }
        }
    }
}

/// Output-process family induced by a channel family and a fixed input.
#[derive(Debug, Clone)]
pub enum OutputFamily {
    Finite(PolynomialFamily),
    Gaussian(GaussianScaleFamily),
}

impl ParametrizedFamily for OutputFamily {
    fn domain(&self) -> (f64, f64) {
        match self {
            OutputFamily::Finite(f) => f.domain(),
            OutputFamily::Gaussian(f) => f.domain(),
        }
    }

    fn model_at(&self, theta: f64) -> Result<HiddenMarkovModel> {
        match self {
            OutputFamily::Finite(f) => f.model_at(theta),
            OutputFamily::Gaussian(f) => f.model_at(theta),
        }
    }

    fn high_noise_point(&self) -> Option<f64> {
        match self {
            OutputFamily::Finite(f) => f.high_noise_point(),
            OutputFamily::Gaussian(f) => f.high_noise_point(),
        }
    }

    fn derivatives(&self, theta: f64) -> Result<MatrixDerivatives> {
        match self {
            OutputFamily::Finite(f) => f.derivatives(theta),
            OutputFamily::Gaussian(f) => f.derivatives(theta),
        }
    }
}
