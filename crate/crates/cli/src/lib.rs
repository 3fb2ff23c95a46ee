//! Command-line front end for the biphoton bench simulator: typed TOML
//! experiment configs, published presets, scenario execution with
//! deterministic CSV/report outputs, and a run manifest that re-runs.

pub mod config;
pub mod error;
pub mod presets;
pub mod scenario;

pub use config::{ExperimentConfig, Scenario};
pub use error::CliError;
pub use scenario::{execute, write_run, RunOutput};
