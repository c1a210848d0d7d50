//! Command-line front end for `phasecomp-core`: run configuration, command
//! dispatch and versioned JSON reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, parse_config_from, CommandConfig, ConfigError, OutcomeChoice, RunConfig, UnitaryChoice};
pub use report::{read_report, write_csv, write_report, Payload, Report, SCHEMA_VERSION};
pub use run::{run, RunError};
