use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model at `{path}`: {message}")]
    InvalidModel { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("chain is not primitive: no positive power P^k with k <= {bound}")]
    NonPrimitiveChain { bound: usize },

    #[error("model is not primitive: {0}")]
    NotPrimitive(String),

    #[error("no positive power of P within k_max = {0}")]
    NotPrimitiveWithin(usize),

    #[error("observation probability h_{{{from}{to}}}({symbol}) is zero on a valid edge")]
    ZeroObservationProbability { from: usize, to: usize, symbol: usize },

    #[error("vector has a non-positive entry at index {index} ({value})")]
    NonPositiveVector { index: usize, value: f64 },

    #[error("matrix has a zero entry at ({row}, {col}); use a k-step product")]
    ZeroEntry { row: usize, col: usize },

    #[error("impossible observation: belief normalizer is {0}")]
    DegenerateBelief(f64),

    #[error("path length {n} is shorter than 10 x burn-in ({burn_in})")]
    PathTooShort { n: usize, burn_in: usize },

    #[error("alphabet too large for exact enumeration: {size}^{n} blocks")]
    AlphabetTooLarge { size: usize, n: usize },

    #[error("operation requires a finite output alphabet")]
    RequiresFiniteAlphabet,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("dominant eigenvalue gap too small ({gap:e})")]
    DegenerateSpectrum { gap: f64 },

    #[error("stationary distribution varies with theta (max deviation {deviation:e} at theta = {theta})")]
    PiNotConstant { theta: f64, deviation: f64 },

    #[error("invalid edge perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("model does not factorize at theta = {theta} (residual {residual:e})")]
    NotFactorized { theta: f64, residual: f64 },

    #[error("not a high-noise point: {0}")]
    NotHighNoise(String),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph has no cycle")]
    NoCycle,

    #[error("no convergence after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("theta = {theta} outside the family domain [{lo}, {hi}]")]
    OutOfDomain { theta: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn model(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidModel { path: path.into(), message: message.into() }
    }

    /// Short machine-readable category used by the command-line runner.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidModel { .. } | Error::DimensionMismatch(_) => "ModelValidationError",
            Error::NonPrimitiveChain { .. } => "NonPrimitiveChain",
            Error::NotPrimitive(_) => "NotPrimitive",
            Error::NotPrimitiveWithin(_) => "NotPrimitiveWithin",
            Error::ZeroObservationProbability { .. } => "ZeroObservationProbability",
            Error::NonPositiveVector { .. } => "NonPositiveVector",
            Error::ZeroEntry { .. } => "ZeroEntry",
            Error::DegenerateBelief(_) => "DegenerateBelief",
            Error::PathTooShort { .. } => "PathTooShort",
            Error::AlphabetTooLarge { .. } => "AlphabetTooLarge",
            Error::RequiresFiniteAlphabet | Error::NotApplicable(_) => "NotApplicable",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrum",
            Error::PiNotConstant { .. } => "PiNotConstant",
            Error::InvalidPerturbation(_) => "InvalidPerturbation",
            Error::NotFactorized { .. } => "NotFactorized",
            Error::NotHighNoise(_) => "NotHighNoise",
            Error::NotStronglyConnected => "NotStronglyConnected",
            Error::NoCycle => "NoCycle",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::OutOfDomain { .. } | Error::InvalidArgument(_) => "ConfigError",
        }
    }
}
