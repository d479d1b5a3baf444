//! Driver for the `hps` command: configuration, run modes and result files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_bytes, BoxesSpec, Mode, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, RunSummary};
