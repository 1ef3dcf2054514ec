//! Configuration-driven runner behind the `simulate` binary.
//!
//! A JSON experiment description selects one of four modes (`spectrum`,
//! `evolve`, `sweep`, `jump`); results are written as CSV tables or a single
//! JSON document, next to a manifest of the resolved parameters.

pub mod config;
pub mod error;
pub mod export;
pub mod run;

pub use config::{parse_config, parse_str, read_config, ExperimentConfig, Format, Mode, Overrides};
pub use error::{CliError, CliResult};
pub use export::{render, write_outputs};
pub use run::{run, run_with_workers, Results, RunReport};
