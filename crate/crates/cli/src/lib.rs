//! Command-line front end for `disteval`: experiment specs, runners,
//! artifact writers and the invariant check suite.

pub mod cli;
pub mod error;
pub mod plot;
pub mod run;
pub mod spec;
pub mod stats;
pub mod verify;

pub use cli::run_cli;
pub use error::{CliError, CliResult};
