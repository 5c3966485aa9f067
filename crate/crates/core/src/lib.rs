//! Entropy rates of hidden Markov processes, their parameter derivatives,
//! high-noise series expansions, and high-noise capacity expansions of
//! finite-state channels.
//!
//! Observations attach to transitions: `[M(y)]_ij = p_ij h_ij(y)`. All
//! entropies are in nats.

// `!(x > 0.0)` also rejects NaN; index loops mirror the matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod belief;
pub mod blackwell;
pub mod capacity;
pub mod certificate;
pub mod channel;
pub mod contraction;
pub mod derivative;
pub mod entropy;
pub mod error;
pub mod estimator;
pub mod family;
pub mod graph;
pub mod isi;
pub mod linalg;
pub mod markov;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod series;
pub mod simulate;

pub use belief::{backward_step, forward_step, BeliefPair};
pub use blackwell::{sample_blackwell, BlackwellSample, Direction};
pub use capacity::{
    capacity_expansion_report, capacity_second_derivative, conditional_entropy_series, mutual_information_rate_mc, mutual_information_rate_mc_with,
    rll_bsc_capacity_coefficient, CapacityReport, CapacityRow,
};
pub use certificate::{default_burn_in, primitivity_certificate, PrimitivityCertificate};
pub use channel::{compose, ChannelFamily, ChannelLaw, Composition, FiniteStateChannel, MarkovInput, OutputFamily};
pub use contraction::{birkhoff_coefficients, hilbert_distance, BirkhoffCoefficients};
pub use derivative::{
    edge_occupancy_entropy_derivative, entropy_derivative_mc, lsr_derivative, measure_property_check, EdgePerturbation, IdentityResidual,
    PropertyReport,
};
pub use entropy::{entropy_rate_exact, entropy_rate_mc, entropy_rate_mc_with, entropy_rate_terms};
pub use error::{Error, Result};
pub use estimator::EstimatorResult;
pub use family::{verify_pi_constant, GaussianScaleFamily, MatrixDerivatives, ParametrizedFamily, PolynomialFamily};
pub use graph::{max_mean_cycle, Digraph};
pub use isi::{isi_edge_optimizer, isi_graph, vertex_enumeration_optimum, EdgeOccupancy, IsiOptimum};
pub use linalg::Matrix;
pub use markov::{stationary_distribution, MarkovChain};
pub use model::{block_probability, HiddenMarkovModel, ObservationMatrixSet, Output};
pub use quadrature::GaussHermite;
pub use rng::SeedRecord;
pub use series::{
    detect_high_noise_point, entropy_series, gaussian_second_derivative, high_noise_derivatives, single_letter_entropy_and_derivatives,
    HighNoisePoint, ScalarLaw, SeriesExpansion, SingleLetter,
};
pub use simulate::{simulate_path, SamplePath};
