//! Command-line front end for `xportme`: CSV ingestion, configuration and the
//! `estimate`, `weights`, `simulate` and `dom` commands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod terms;

pub use commands::{cmd_dom, cmd_estimate, cmd_simulate, cmd_weights};
pub use csv_io::{parse_stacked_csv, parse_stacked_reader, write_stacked_csv, StackedInput};
pub use error::{CliError, Result};
pub use terms::parse_terms;
