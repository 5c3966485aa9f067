use std::fmt;
use std::path::PathBuf;

use crate::error::{CliError, Result};
use crate::record::{Format, Units};

/// Largest number of points a `--theta-grid` may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DerivMode {
    /// Blackwell-measure estimator for a parametrized observation family.
    Observation,
    /// Edge-occupancy perturbation of the transition matrix.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Entropy,
    EntropyExact,
    Deriv(DerivMode),
    Series,
    CapacityExpansion,
    IsiOptimize,
    Check,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Entropy => "entropy",
            Operation::EntropyExact => "entropy-exact",
            Operation::Deriv(DerivMode::Observation) => "deriv-observation",
            Operation::Deriv(DerivMode::Edge) => "deriv-edge",
            Operation::Series => "series",
            Operation::CapacityExpansion => "capacity-expansion",
            Operation::IsiOptimize => "isi-optimize",
            Operation::Check => "check",
        }
    }

    fn uses_channel(&self) -> bool {
        matches!(self, Operation::CapacityExpansion | Operation::IsiOptimize)
    }

    fn is_random(&self) -> bool {
        matches!(self, Operation::Entropy | Operation::Deriv(_) | Operation::CapacityExpansion)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    None,
    Value(f64),
    Grid { start: f64, stop: f64, step: f64 },
}

impl ThetaSpec {
    /// Parses `start:stop:step`.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::config(format!("--theta-grid expects start:stop:step, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let spec = ThetaSpec::Grid { start: nums[0], stop: nums[1], step: nums[2] };
        spec.values()?;
        Ok(spec)
    }

    /// Grid points `start + k step` up to `stop` (inclusive, with rounding slack).
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            ThetaSpec::None => Ok(Vec::new()),
            ThetaSpec::Value(t) if t.is_finite() => Ok(vec![t]),
            ThetaSpec::Value(t) => Err(CliError::config(format!("--theta must be finite, got {t}"))),
            ThetaSpec::Grid { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
                    return Err(CliError::config("--theta-grid needs finite start <= stop and step > 0"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > MAX_GRID_POINTS {
                    return Err(CliError::config(format!("--theta-grid expands to {count} points (limit {MAX_GRID_POINTS})")));
                }
                Ok((0..count).map(|k| start + k as f64 * step).collect())
            }
        }
    }

    /// One entry per θ, or a single `None` when no θ was given.
    pub fn points(&self) -> Result<Vec<Option<f64>>> {
        let v = self.values()?;
        Ok(if v.is_empty() { vec![None] } else { v.into_iter().map(Some).collect() })
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::None => f.write_str("-"),
            ThetaSpec::Value(t) => write!(f, "{t}"),
            ThetaSpec::Grid { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub operation: Operation,
    pub model: Option<PathBuf>,
    pub channel: Option<PathBuf>,
    pub theta: ThetaSpec,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub burn_in: Option<usize>,
    /// Lag window of the edge-occupancy derivative.
    pub window: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub units: Units,
    /// Where `entropy` writes the per-step beliefs of its path.
    pub beliefs: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(operation: Operation) -> Self {
        ExperimentConfig {
            operation,
            model: None,
            channel: None,
            theta: ThetaSpec::None,
            n: None,
            samples: None,
            burn_in: None,
            window: None,
            seed: None,
            workers: None,
            out: None,
            format: Format::Csv,
            units: Units::Nats,
            beliefs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let op = self.operation;
        if op.uses_channel() {
            require_file(&self.channel, "--channel")?;
        } else {
            require_file(&self.model, "--model")?;
        }
        for (flag, value) in [("--n", self.n), ("--samples", self.samples), ("--workers", self.workers), ("--window", self.window)] {
            if value == Some(0) {
                return Err(CliError::config(format!("{flag} must be positive")));
            }
        }
        let needs_n = matches!(op, Operation::Entropy | Operation::EntropyExact | Operation::CapacityExpansion);
        if needs_n && self.n.is_none() {
            return Err(CliError::config(format!("{} needs --n", op.name())));
        }
        if matches!(op, Operation::Deriv(_)) && self.samples.is_none() {
            return Err(CliError::config("deriv needs --samples"));
        }
        if op.is_random() && self.seed.is_none() {
            return Err(CliError::config(format!("{} is a Monte Carlo operation and needs --seed", op.name())));
        }
        let thetas = self.theta.values()?;
        if matches!(op, Operation::Deriv(DerivMode::Observation) | Operation::CapacityExpansion) && thetas.is_empty() {
            return Err(CliError::config(format!("{} needs --theta or --theta-grid", op.name())));
        }
        if matches!(op, Operation::Check) && thetas.len() > 1 {
            return Err(CliError::config("check takes a single --theta"));
        }
        if self.beliefs.is_some() && (op != Operation::Entropy || thetas.len() > 1) {
            return Err(CliError::config("--beliefs needs the entropy operation and at most one theta"));
        }
        Ok(())
    }

    /// Inputs echoed into the result header. Worker count is left out on
    /// purpose: it never changes the result.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut add = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        add("model", self.model.as_ref().map(|p| p.display().to_string()));
        add("channel", self.channel.as_ref().map(|p| p.display().to_string()));
        add("theta", (self.theta != ThetaSpec::None).then(|| self.theta.to_string()));
        add("n", self.n.map(|v| v.to_string()));
        add("samples", self.samples.map(|v| v.to_string()));
        add("burnin", self.burn_in.map(|v| v.to_string()));
        add("window", self.window.map(|v| v.to_string()));
        out
    }
}

fn require_file(path: &Option<PathBuf>, flag: &str) -> Result<()> {
    match path {
        None => Err(CliError::config(format!("{flag} FILE is required"))),
        Some(p) if !p.is_file() => Err(CliError::config(format!("{flag}: {} does not exist", p.display()))),
        Some(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = ThetaSpec::parse_grid("0:0.5:0.1").unwrap();
        let v = g.values().unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[5] - 0.5).abs() < 1e-15);
        assert_eq!(g.to_string(), "0:0.5:0.1");
        assert!(ThetaSpec::parse_grid("0:1").is_err());
        assert!(ThetaSpec::parse_grid("1:0:0.1").is_err());
        assert!(ThetaSpec::parse_grid("0:1:0").is_err());
        assert_eq!(ThetaSpec::None.points().unwrap(), vec![None]);
    }

    #[test]
    fn zero_length_is_a_config_error() {
        let mut cfg = ExperimentConfig::new(Operation::Entropy);
        cfg.model = Some(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/Cargo.toml")));
        cfg.seed = Some(1);
        cfg.n = Some(0);
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.category(), "ConfigError");
        cfg.n = Some(10);
        cfg.validate().unwrap();
        cfg.seed = None;
        assert_eq!(cfg.validate().unwrap_err().category(), "ConfigError");
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let mut cfg = ExperimentConfig::new(Operation::Series);
        cfg.model = Some(PathBuf::from("/nonexistent/model.json"));
        assert_eq!(cfg.validate().unwrap_err().category(), "ConfigError");
    }
}
