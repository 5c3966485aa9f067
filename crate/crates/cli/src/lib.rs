//! Experiment runner behind the `hmprate` command: model and channel files,
//! configuration, dispatch and CSV / JSON result records.

pub mod check;
pub mod config;
pub mod error;
pub mod files;
mod json;
pub mod record;
pub mod run;

pub use check::check;
pub use config::{DerivMode, ExperimentConfig, Operation, ThetaSpec};
pub use error::{CliError, Result};
pub use files::{ChannelFile, ModelFile};
pub use record::{Cell, Column, Format, ResultRecord, Units};
pub use run::run;
