//! Library side of the `entcut` command: configuration, run records, the job
//! runner and the analysis modes.

pub mod analyze;
pub mod config;
pub mod error;
pub mod io;
pub mod predict;
pub mod record;
pub mod run;

pub use error::{CliError, CliResult};
