use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmprate_cli::{run, CliError, DerivMode, ExperimentConfig, Format, Operation, ThetaSpec, Units};

/// Entropy rates, entropy-rate derivatives and high-noise expansions of hidden Markov processes.
#[derive(Parser)]
#[command(name = "hmprate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo entropy rate along one simulated path.
    Entropy {
        #[command(flatten)]
        common: Common,
        /// Also write per-step beliefs (t, alpha, beta, psi) of the path as CSV.
        #[arg(long, value_name = "FILE")]
        beliefs: Option<PathBuf>,
    },
    /// Entropy rate by enumerating all blocks of length --n.
    EntropyExact {
        #[command(flatten)]
        common: Common,
    },
    /// Derivative of the entropy rate.
    Deriv {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "observation")]
        mode: DerivMode,
        /// Lag window for --mode edge (default from the chain's mixing rate).
        #[arg(long)]
        window: Option<usize>,
    },
    /// Second-order expansion of the entropy rate at the high-noise point.
    Series {
        #[command(flatten)]
        common: Common,
    },
    /// Capacity curvature and Monte Carlo check for each input law of a channel.
    CapacityExpansion {
        #[command(flatten)]
        common: Common,
    },
    /// Best edge occupancy for the high-noise rate of an ISI channel.
    IsiOptimize {
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite on a model.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    channel: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "theta_grid")]
    theta: Option<f64>,
    /// start:stop:step
    #[arg(long, value_name = "A:B:STEP", allow_hyphen_values = true)]
    theta_grid: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "burnin")]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Report information quantities in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

impl Common {
    fn into_config(self, operation: Operation) -> Result<ExperimentConfig, CliError> {
        let theta = match (self.theta, &self.theta_grid) {
            (Some(t), _) => ThetaSpec::Value(t),
            (None, Some(g)) => ThetaSpec::parse_grid(g)?,
            (None, None) => ThetaSpec::None,
        };
        let mut cfg = ExperimentConfig::new(operation);
        cfg.model = self.model;
        cfg.channel = self.channel;
        cfg.theta = theta;
        cfg.n = self.n;
        cfg.samples = self.samples;
        cfg.burn_in = self.burn_in;
        cfg.seed = self.seed;
        cfg.workers = self.workers;
        cfg.out = self.out;
        cfg.format = self.format;
        cfg.units = if self.bits { Units::Bits } else { Units::Nats };
        Ok(cfg)
    }
}

fn config(command: Command) -> Result<ExperimentConfig, CliError> {
    Ok(match command {
        Command::Entropy { common, beliefs } => {
            let mut cfg = common.into_config(Operation::Entropy)?;
            cfg.beliefs = beliefs;
            cfg
        }
        Command::EntropyExact { common } => common.into_config(Operation::EntropyExact)?,
        Command::Deriv { common, mode, window } => {
            let mut cfg = common.into_config(Operation::Deriv(mode))?;
            cfg.window = window;
            cfg
        }
        Command::Series { common } => common.into_config(Operation::Series)?,
        Command::CapacityExpansion { common } => common.into_config(Operation::CapacityExpansion)?,
        Command::IsiOptimize { common } => common.into_config(Operation::IsiOptimize)?,
        Command::Check { common } => common.into_config(Operation::Check)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = config(cli.command).and_then(|cfg| {
        let record = run(&cfg)?;
        if cfg.out.is_none() {
            print!("{}", record.render(cfg.format)?);
        }
        eprintln!("wall time: {:.3} s", record.wall_time_s);
        Ok(record)
    });
    match outcome {
        Ok(record) if record.passed => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error[CheckFailed]: at least one invariant group failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(2)
        }
    }
}
