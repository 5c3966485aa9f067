//! Sample paths of a hidden Markov process.

use rand::Rng;

use crate::model::{HiddenMarkovModel, Output};
use crate::rng::SeedRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    /// `q_1 .. q_{n+1}`.
    pub states: Vec<usize>,
    /// `y_1 .. y_n`, where `y_t` is emitted by the transition `q_t -> q_{t+1}`.
    pub outputs: Vec<Output>,
    pub seed: SeedRecord,
}

/// Simulates `n` transitions starting from `q_1 ~ π`.
pub fn simulate_path(model: &HiddenMarkovModel, n: usize, seed: u64) -> SamplePath {
    let record = SeedRecord::new(seed);
    let mut rng = record.rng();
    let mut states = Vec::with_capacity(n + 1);
    let mut outputs = Vec::with_capacity(n);
    let mut walk = Walk::start(model, &mut rng);
    states.push(walk.state);
    for _ in 0..n {
        let y = walk.step(model, &mut rng);
        states.push(walk.state);
        outputs.push(y);
    }
    SamplePath { states, outputs, seed: record }
}

/// Streaming forward walk that does not store the path.
pub(crate) struct Walk {
    pub state: usize,
}

impl Walk {
    pub fn start<R: Rng + ?Sized>(model: &HiddenMarkovModel, rng: &mut R) -> Self {
        Walk { state: model.sample_initial(rng) }
    }

    /// Advances one transition and returns the emitted output.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, model: &HiddenMarkovModel, rng: &mut R) -> Output {
        let next = model.sample_next(self.state, rng);
        let y = model.sample_output(self.state, next, rng);
        self.state = next;
        y
    }

    /// One step of the time-reversed walk; returns the output of the edge just crossed backwards.
    #[inline]
    pub fn step_back<R: Rng + ?Sized>(&mut self, model: &HiddenMarkovModel, rng: &mut R) -> Output {
        let prev = model.sample_previous(self.state, rng);
        let y = model.sample_output(prev, self.state, rng);
        self.state = prev;
        y
    }
}
